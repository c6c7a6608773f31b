# Implicit-feedback alternating least squares.
# R holds raw interaction strengths, P the 0/1 preferences (R > 0).


def update_row(Y, YtY, c, p, lam):
    f = Y.shape[1]
    A = YtY + np.dot(np.dot(Y.T, np.diag(c - 1.0)), Y) + lam * np.identity(f)
    b = np.dot(Y.T, c * p)
    return np.linalg.solve(A, b)


def sweep_rows(X, Y, C, P, lam):
    YtY = np.dot(Y.T, Y)
    i = 0
    while i < X.shape[0]:
        X[i] = update_row(Y, YtY, C[i], P[i], lam)
        i += 1
    return X


def als(R, P, factors, lam, alpha_c, sweeps, seed):
    m = R.shape[0]
    n = R.shape[1]
    U = 0.01 * rand([m, factors], seed)
    V = 0.01 * rand([n, factors], seed + 1)
    C = 1.0 + alpha_c * R
    Ct = C.T
    Pt = P.T
    s = 0
    while s < sweeps:
        U = sweep_rows(U, V, C, P, lam)
        V = sweep_rows(V, U, Ct, Pt, lam)
        s += 1
    return [U, V]
