# Batch logistic regression trained by gradient descent.
def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def lra(X, y, alpha, iterations):
    w = np.zeros(X.shape[1])
    i = 0
    while i < iterations:
        pred = sigmoid(np.dot(X, w))
        grad = np.dot(X.T, pred - y)
        w = w - alpha * grad
        i += 1
    return w
