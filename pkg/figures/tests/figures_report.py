"""Registry of A13 result lines, printed in the pytest terminal summary."""

LINES = []


def report(name, ok, detail=""):
    line = "A13[%s]: %s%s" % (name, "PASS" if ok else "FAIL",
                              " (%s)" % detail if detail else "")
    LINES.append(line)
    print(line)
