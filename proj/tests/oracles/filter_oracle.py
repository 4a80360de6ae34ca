"""Two filter steps from the reference initial condition (numpy / scipy).

E is the full 9-direction catalog with d = (30, 20, 10); gains m=100, l=40,
kp=150, h=0.01; the gyro reads the true Omega0 at steps 0, 1 and 2. Prints
values for tests/test_filter.cpp.
"""
import numpy as np
from scipy.spatial.transform import Rotation

CATALOG = np.array([
    [0.10855549996800727, 0.7468528152792917, 0.65606903275195971],
    [0.59165473974636262, 0.39217864915294698, -0.70437246970919698],
    [-0.73878284581734677, -0.13492966946242341, -0.66029833486446388],
    [-0.84430141899038824, -0.52167348770621935, -0.12252300239239081],
    [0.28688755164129193, -0.024048009987605493, -0.9576623757509225],
    [0.79701392086179623, -0.40336120170760315, -0.44952035650179945],
    [0.87927273915433857, 0.2634647813007171, -0.39681955495437959],
    [0.93457183524181098, -0.33433243930315593, 0.12164417290752143],
    [-0.45436210823799184, 0.81808254275960379, -0.35255641793833292],
]).T
m, l, kp, h = 100.0, 40.0, 150.0, 0.01


def expm(v):
    return Rotation.from_rotvec(v).as_matrix()


def vex(M):
    return np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]]) / 2


def main():
    E = CATALOG / np.linalg.norm(CATALOG, axis=0)
    _, s, Vt = np.linalg.svd(E)
    w0 = np.full(9, 1e-6)
    w0[:3] = np.array([30.0, 20.0, 10.0]) / s**2
    W = Vt.T @ np.diag(w0) @ Vt
    K = E @ W @ E.T

    a = np.array([4.0, 2.0, 5.0]) / 7
    R0 = expm(np.pi / 4 * a)
    Q0 = expm(np.pi / 2.5 * a)
    Rh = [Q0.T @ R0]
    Om = np.pi / 60 * np.array([-1.2, 2.1, -1.9])
    w = [np.pi / 60 * np.array([0.001, -0.002, 0.003])]
    Oh = [Om - w[0]]
    U = [R0.T @ E]
    S = []
    for i in range(2):
        L = E @ W @ U[i].T
        S.append(vex(L.T @ Rh[i] - Rh[i].T @ L))
        w.append(((m - l) * w[i] + kp * h * S[i]) / (m + l))
        Oh.append(Om - w[i + 1])
        Rh.append(Rh[i] @ expm(h / 2 * (Oh[i + 1] + Oh[i])))
        U.append(expm(-h * Om) @ U[i])

    F = expm(h / 2 * (Oh[1] + Oh[0]))
    tau1 = (2 * m * (w[1] + w[0]) + h * S[1]
            - 2 * m / (m + l) * F @ (2 * m * w[1] + kp * h * S[1])) / h
    resid = m * (w[2] + w[1]) - F.T @ (m * (w[1] + w[0]) + h / 2 * S[1] - h / 2 * tau1)

    Q = R0 @ Rh[0].T
    V0 = kp * (np.trace(K) - np.trace(Q.T @ K)) + m / 2 * w[0] @ w[0]
    print("S_L0 =", repr(S[0].tolist()))
    print("omega1 =", repr(w[1].tolist()))
    print("R_hat1 =", repr(Rh[1].ravel().tolist()))
    print("omega2 =", repr(w[2].tolist()))
    print("tau1 =", repr(tau1.tolist()))
    print("residual =", repr(float(np.linalg.norm(resid))))
    print("V0 =", repr(float(V0)))


if __name__ == "__main__":
    main()
