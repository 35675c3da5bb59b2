"""``gar-sidecar``: serve the scoring protocol over HTTP."""

from __future__ import annotations

import argparse
import sys

from gar_sidecar.service import create_server


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="gar-sidecar",
        description="Pointwise scoring service: POST /score, GET /health.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8500, help="0 picks a free port")
    parser.add_argument("--model", default="stub", help="stub | hf:<model-id>")
    parser.add_argument(
        "--prompt-file",
        help="prompt template with {query} and {doc} placeholders (hf mode only)",
    )
    args = parser.parse_args(argv)
    try:
        server = create_server(args.host, args.port, model=args.model, prompt_file=args.prompt_file)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    host, port = server.server_address[:2]
    print(f"serving {args.model} at http://{host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
