def add(a, b):
    return a + b


def sub(a, b):
    result = a - b
    return result


def mul(a, b):
    result = 0
    for _ in range(b):
        result += a
    return result
