"""Registry of acceptance-criterion result lines, printed in the pytest
terminal summary (plain prints are swallowed by capture for passing tests)."""

LINES = []


def report(name, ok, detail):
    line = "%s: %s  (%s)" % (name, "PASS" if ok else "FAIL", detail)
    LINES.append(line)
    print(line)
    assert ok, line
