import logging
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, select_autoescape

from app.core.errors import OutputError

logger = logging.getLogger(__name__)

env = Environment(
    loader=FileSystemLoader(Path(__file__).resolve().parent.parent / "templates"),
    autoescape=select_autoescape(["html", "xml"]),
    trim_blocks=True,
    lstrip_blocks=True,
    keep_trailing_newline=True,
)


def render_template(template_name: str, context: dict) -> str:
    template = env.get_template(template_name)
    return template.render(**context)


def write_regime_atlas(path: Path, axes: dict[str, list], rows: list[dict], title: str) -> Path:
    """Markdown table of a sweep: one line per point with its label and rationale."""
    text = render_template(
        "regime_atlas.md.j2",
        {"title": title, "axes": axes, "rows": rows},
    )
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.info("Regime atlas written to %s", path)
    return Path(path)
