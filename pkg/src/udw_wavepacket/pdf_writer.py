# src/udw_wavepacket/pdf_writer.py
#
# Markdown run report -> PDF with pure Python libraries:
# - markdown: Markdown -> HTML
# - xhtml2pdf: HTML -> PDF

import os

from markdown import markdown
from xhtml2pdf import pisa

from .logging_utils import log_info, log_error


_STYLE = """
  body { font-family: DejaVu Sans, Arial, Helvetica, sans-serif; font-size: 10pt; line-height: 1.35; }
  h1 { font-size: 17pt; margin-bottom: 6px; }
  h2 { font-size: 13pt; margin-top: 12px; margin-bottom: 4px; }
  ul { margin: 2px 0 6px 0; }
  table { border-collapse: collapse; width: 100%; margin: 6px 0; }
  th, td { border: 1px solid #bbbbbb; padding: 3px 5px; font-size: 8pt; font-family: "DejaVu Sans Mono", monospace; }
  th { background: #e8e8e8; }
  em { color: #555555; }
"""


def render_html(markdown_text: str) -> str:
    """Standalone HTML page for a Markdown report."""
    body_html = markdown(markdown_text, extensions=["tables"])
    return (
        "<html><head><meta charset=\"utf-8\" />"
        f"<style>{_STYLE}</style>"
        f"</head><body>{body_html}</body></html>"
    )


def save_pdf_from_markdown(markdown_text: str, output_path: str) -> None:
    """
    Convert a Markdown report to PDF.

    Raises RuntimeError if xhtml2pdf reports errors.
    """
    full_html = render_html(markdown_text)

    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    log_info(f"Rendering PDF report at '{output_path}'...")

    with open(output_path, "wb") as pdf_file:
        pisa_status = pisa.CreatePDF(full_html, dest=pdf_file)

    if pisa_status.err:
        log_error(f"PDF rendering failed for '{output_path}'.")
        raise RuntimeError("PDF generation failed (xhtml2pdf reported errors).")

    log_info(f"PDF report written to '{output_path}'.")
