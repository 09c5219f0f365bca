"""Reference values used by ``verify`` and the acceptance suite."""

from __future__ import annotations

# n[g, j] for the cycle of 13#, lengths listed from j = 1; None marks an empty cell.
TABLE_13 = {
    2: [1485],
    4: [1485],
    6: [1690, 1280],
    8: [394, 902, 189],
    10: [438, 1164, 378],
    12: [188, 1276, 1314, 192],
    14: [58, 536, 900, 288],
    16: [12, 252, 750, 436, 35],
    18: [8, 256, 1224, 1272, 210],
    20: [None, 24, 348, 960, 600, 48],
    22: [2, 48, 312, 784, 504],
    24: [None, 20, 258, 928, 1260, 504],
    26: [None, 2, 40, 322, 724, 448, 84],
    28: [None, None, 36, 344, 794, 528, 80],
    30: [None, None, 10, 194, 1066, 1784, 816, 90],
    32: [None, None, None, 12, 200, 558, 523, 172, 20],
}


def table_13_cells() -> dict[tuple[int, int], int]:
    return {(g, j): n for g, row in TABLE_13.items() for j, n in enumerate(row, start=1) if n is not None}


# largest gap in the cycle for p#
MAX_GAP = {3: 4, 5: 6, 7: 10, 11: 14, 13: 22, 17: 26, 19: 34, 23: 40, 29: 46, 31: 58, 37: 66, 41: 74}

# Excerpt for 31#: g -> (counts for j = 9 - len + 1 .. 9, ratio sum shown, limit shown).
# Every listed row runs through j = 9.
TABLE_31 = {
    74: ([1, 1206, 70194, 1550662, 17523160, 113497678, 445136490], "1", "1.02857"),
    76: ([602, 32194, 765488, 9470176, 68041280, 302507798], "1.0588", "1.0588"),
    78: ([292, 26060, 826426, 12166908, 99284264, 489040926], "2.1818", "2.1818"),
    80: ([2, 2876, 139926, 2656274, 26634332, 159280176], "1.3333", "1.3333"),
    82: ([747, 46878, 1066848, 12378176, 83484438], "1", "1.0256"),
    84: ([2, 1012, 58216, 1485176, 18772184, 135450260], "2.4", "2.4"),
    86: ([74, 4726, 147779, 2453256, 23265268], "1", "1.0244"),
    88: ([2, 2190, 107182, 2025910, 20603366], "1.1111", "1.1111"),
    90: ([8, 300, 9360, 195708, 2829548, 26983182], "2.6667", "2.6667"),
    92: ([20, 860, 26854, 488854, 5364068], "1.0476", "1.0476"),
    94: ([16, 740, 19740, 333162, 3684805], "1", "1.0222"),
    96: ([4, 242, 9636, 249610, 3693782], "2", "2"),
    98: ([28, 1482, 52328, 968210], "1.2", "1.2"),
    100: ([8, 672, 26428, 567560], "1.3333", "1.3333"),
    102: ([78, 7042, 249300], "2.133", "2.133"),
    104: ([182, 6086, 129016], "1.0909", "1.0909"),
    106: ([16, 1168, 37144], "1", "1.0196"),
    108: ([8, 1244, 44334], "2", "2"),
    110: ([142, 7686], "1.4815", "1.4815"),
    112: ([68, 5294], "1.2", "1.2"),
    114: ([22, 2388], "2.1176", "2.1176"),
    116: ([224, 4716], "1.0370", "1.0370"),
    118: ([72], "1", "1.0175"),
    120: ([1012], "2.6667", "2.6667"),
    122: ([70], "1", "1.0169"),
    124: ([28], "1.0345", "1.0345"),
    126: ([4], "2.4", "2.4"),
    128: ([], "1", "1"),
    130: ([], "1.4545", "1.4545"),
    132: ([2], "2.2222", "2.2222"),
}


def table_31_row(g: int) -> dict[int, int]:
    """Reference counts for ``g`` at 31#, lengths 1..9, zeros included."""
    values = TABLE_31[g][0]
    first = 10 - len(values)
    row = {j: 0 for j in range(1, 10)}
    row.update({first + i: n for i, n in enumerate(values)})
    return row
