"""Command line: template generation, fixture export, and the HTTP service.

``guidecad generate`` is the workhorse; calling the tool with flags only
(no subcommand) is shorthand for it. Exit codes: 0 success, 1 stage or
input errors, 2 usage errors.
"""

import argparse
import os
import sys

import numpy as np

from .contour import read_contour, write_contour
from .errors import ContractError, GuidecadError
from .fixtures import FIXTURES
from .pipeline import TemplateParams, generate_template
from .stl import load_stl, write_stl
from .tubes import DrillAxis, read_axes, write_axes


def _seed_type(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z got {text!r}")
    try:
        return np.array([float(p) for p in parts])
    except ValueError:
        raise argparse.ArgumentTypeError(f"unparseable seed point {text!r}") from None


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="guidecad",
        description="Surgical template and drill-guide generation from STL meshes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="build a template STL from mesh and contour")
    gen.add_argument("--mesh", required=True, help="anatomy surface, STL")
    gen.add_argument("--contour", required=True, help="control points, one x y z per line")
    gen.add_argument("--axes", help="drill axes, one per line (optional)")
    gen.add_argument("--thickness", type=float, default=2.5, help="template wall, mm")
    gen.add_argument(
        "--sampling-step", type=int, default=10,
        help="stride over inner border points for outer clipping",
    )
    gen.add_argument("--spacing", type=float, help="grid/resample step, mm (default thickness/4)")
    gen.add_argument("--out", required=True, help="output template STL")
    gen.add_argument("--timings", help="write the stage timing report here instead of stdout")
    gen.add_argument(
        "--seed", type=_seed_type, metavar="X,Y,Z",
        help="point on the side of the contour to keep",
    )

    fix = sub.add_parser("fixtures", help="write a synthetic test mesh")
    fix.add_argument("name", choices=sorted(FIXTURES))
    fix.add_argument("--out", required=True, help="output STL")
    fix.add_argument("--contour", help="also write a demo contour here")
    fix.add_argument("--axes", help="also write a demo drill axis here")

    srv = sub.add_parser("serve", help="run the interactive design service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, help="default: $GUIDECAD_PORT or 8000")
    return parser


def _demo_contour(name):
    ang = 2.0 * np.pi * np.arange(8) / 8
    if name in ("hemisphere", "sphere", "icosphere"):
        r = 10.0 / np.sqrt(2.0)
        return np.stack([r * np.cos(ang), r * np.sin(ang), np.full(8, r)], axis=1)
    if name in ("plate", "saddle"):
        return np.stack([5.0 * np.cos(ang), 5.0 * np.sin(ang), np.zeros(8)], axis=1)
    raise ContractError(f"no demo contour for fixture {name!r}")


def _demo_axes(name):
    if name in ("hemisphere", "sphere", "icosphere"):
        entry = np.array([0.0, 0.0, 10.0])
    elif name in ("plate", "saddle"):
        entry = np.zeros(3)
    else:
        raise ContractError(f"no demo axis for fixture {name!r}")
    return [
        DrillAxis(
            entry=entry,
            direction=np.array([0.0, 0.0, 1.0]),
            inner_radius=1.5,
            outer_radius=3.0,
            length=6.0,
        )
    ]


def _run_generate(ns):
    mesh = load_stl(ns.mesh)
    controls = read_contour(ns.contour)
    axes = read_axes(ns.axes) if ns.axes else ()
    params = TemplateParams(
        thickness=ns.thickness,
        spacing=ns.spacing,
        sampling_step=ns.sampling_step,
        seed_point=ns.seed,
    )
    template, timings = generate_template(mesh, controls.points, params, axes)
    write_stl(template, ns.out)
    report = timings.report()
    if ns.timings:
        with open(ns.timings, "w") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


def _run_fixtures(ns):
    write_stl(FIXTURES[ns.name](), ns.out)
    if ns.contour:
        write_contour(ns.contour, _demo_contour(ns.name))
    if ns.axes:
        write_axes(ns.axes, _demo_axes(ns.name))
    return 0


def _run_serve(ns):
    import uvicorn

    from .service import create_app

    port = ns.port if ns.port is not None else int(os.environ.get("GUIDECAD_PORT", "8000"))
    uvicorn.run(create_app(), host=ns.host, port=port)
    return 0


def cli_main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0].startswith("--"):
        argv = ["generate"] + argv
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if ns.command == "generate":
            return _run_generate(ns)
        if ns.command == "fixtures":
            return _run_fixtures(ns)
        return _run_serve(ns)
    except GuidecadError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
