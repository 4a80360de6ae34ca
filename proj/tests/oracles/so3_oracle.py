"""Reference exp/log on SO(3) at 50 digits (mpmath).

Rotations come from the unit quaternion (cos(t/2), sin(t/2) a), which shares
no code path with the Rodrigues form used in the library. Prints C++
initializers for tests/test_so3.cpp.
"""
import mpmath as mp

mp.mp.dps = 50

CASES = [
    (1.0, 2.0, 3.0, 0.7),
    (0.3, -0.4, 0.5, 1e-6),
    (-1.0, 0.5, 0.25, 3.0),
    (0.0, 0.0, 1.0, float(mp.pi) - 1e-7),
    (2.0, -1.0, 2.0, 2.5e-5),
]


def quat_rotation(axis, angle):
    n = mp.sqrt(sum(x * x for x in axis))
    a = [x / n for x in axis]
    w = mp.cos(angle / 2)
    x, y, z = (mp.sin(angle / 2) * c for c in a)
    return [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ], [angle * c for c in a]


def main():
    for ax, ay, az, angle in CASES:
        R, v = quat_rotation([mp.mpf(ax), mp.mpf(ay), mp.mpf(az)], mp.mpf(angle))
        vs = ", ".join(mp.nstr(c, 20) for c in v)
        rs = ", ".join(mp.nstr(R[i][j], 20) for i in range(3) for j in range(3))
        print(f"{{{{{vs}}}, {{{rs}}}}},")


if __name__ == "__main__":
    main()


def series_exp(v, terms=30):
    """Truncated matrix-power series sum_k hat(v)^k / k!."""
    K = mp.matrix([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    out = mp.eye(3)
    term = mp.eye(3)
    for k in range(1, terms):
        term = term * K / k
        out += term
    return out


def reference_scenario():
    # Literal rotation vectors (pi/4)(4/7, 2/7, 5/7) and (pi/2.5)(4/7, 2/7, 5/7).
    for scale in (mp.pi / 4, mp.pi / mp.mpf("2.5")):
        v = [scale * mp.mpf(c) / 7 for c in (4, 2, 5)]
        R = series_exp(v)
        print(", ".join(mp.nstr(R[i, j], 20) for i in range(3) for j in range(3)),
              " angle", mp.nstr(mp.sqrt(sum(c * c for c in v)), 20))


if __name__ == "__main__":
    reference_scenario()
