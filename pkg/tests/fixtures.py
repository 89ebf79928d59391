"""Hand-built environments shared by the test modules."""

from __future__ import annotations

from bugnav.envgen import load_env

# rows are listed top (largest y) first; load_env wants y = 0 first
MIRRORED_G = """\
################
#.............T#
#..............#
#..............#
#...########...#
#..........#...#
#..........#...#
#..........#...#
#...####...#...#
#...#......#...#
#...#......#...#
#...########...#
#..............#
#.......S......#
#..............#
################"""

PILLAR = """\
##########
#S.......#
#........#
#........#
#...##...#
#...##...#
#........#
#........#
#.......T#
##########"""

OPEN_ARENA = """\
############
#..........#
#.S........#
#..........#
#..........#
#..........#
#..........#
#..........#
#..........#
#........T.#
#..........#
############"""


def env_from_picture(picture: str, cell_size: float = 1.0):
    rows = picture.split("\n")
    body = "\n".join(reversed(rows))
    return load_env(f"bugnav-env v1 {len(rows[0])} {len(rows)} {cell_size!r}\n{body}\n")
