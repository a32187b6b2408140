"""``plot-figures <recipe.cfg> [...]`` — render figures from result CSVs."""

import sys

from .render import RecipeError, read_recipe, render


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        print("usage: plot-figures <recipe.cfg> [<recipe.cfg> ...]")
        return 0 if argv else 2
    try:
        for path in argv:
            out = render(read_recipe(path))
            print("wrote %s" % out)
    except (RecipeError, OSError) as err:
        print("error: %s" % (err,), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
