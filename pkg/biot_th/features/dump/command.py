"""
Command: dump mesh | dump matrix
"""

import argparse

from biot_th.features.dump.models import DumpMatrixRequest, DumpMeshRequest
from biot_th.shared.models import CommandResult
from biot_th.shared.utils import load_instruction, parse_number
from biot_th.study_service import StudyService


def register_command(subparsers: argparse._SubParsersAction, service: StudyService) -> None:
    """Register the dump sub-command with its mesh and matrix targets"""
    parser = subparsers.add_parser(
        "dump",
        help="Write a mesh or an assembled matrix to disk",
        description=load_instruction("instructions.md", __file__),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    targets = parser.add_subparsers(dest="target", required=True)

    mesh_parser = targets.add_parser("mesh", help="Plain-text vertices, triangles and tagged boundary edges")
    mesh_parser.add_argument("--n", type=int, required=True)
    mesh_parser.add_argument("--out", required=True)

    matrix_parser = targets.add_parser("matrix", help="MatrixMarket file of one block or the coupled matrix")
    matrix_parser.add_argument("--n", type=int, required=True)
    matrix_parser.add_argument("--k", type=int, default=2)
    matrix_parser.add_argument("--l", type=int, default=None)
    matrix_parser.add_argument("--block", default="coupled")
    matrix_parser.add_argument("--case", default="example1")
    matrix_parser.add_argument("--method", type=int, default=1)
    matrix_parser.add_argument("--dt", default="0.25")
    matrix_parser.add_argument("--nu", type=float, default=0.3)
    matrix_parser.add_argument("--K", type=float, default=1.0)
    matrix_parser.add_argument("--out", required=True)

    def handle_mesh(args: argparse.Namespace) -> CommandResult:
        request = DumpMeshRequest(n=args.n, out=args.out)
        return service.dump_mesh(request.n, request.out)

    def handle_matrix(args: argparse.Namespace) -> CommandResult:
        request = DumpMatrixRequest(
            n=args.n,
            k=args.k,
            l=args.l if args.l is not None else args.k - 1,
            block=args.block,
            case=args.case,
            method=args.method,
            dt=parse_number(args.dt),
            nu=args.nu,
            K=args.K,
            out=args.out,
        )
        return service.dump_matrix(
            n=request.n,
            k=request.k,
            l=request.l,
            path=request.out,
            block=request.block,
            case=request.case,
            method=request.method,
            dt=request.dt,
            nu=request.nu,
            K=request.K,
        )

    mesh_parser.set_defaults(handler=handle_mesh)
    matrix_parser.set_defaults(handler=handle_matrix)
