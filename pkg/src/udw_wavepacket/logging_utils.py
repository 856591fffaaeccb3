# src/udw_wavepacket/logging_utils.py
#
# Colored logging helpers for the detector response tools.

RESET = "\033[0m"
RED = "\033[91m"
GREEN = "\033[92m"
YELLOW = "\033[93m"
CYAN = "\033[96m"
MAGENTA = "\033[95m"
BOLD = "\033[1m"


def log_info(msg: str) -> None:
    print(f"{GREEN}[INFO]{RESET} {msg}")


def log_warning(msg: str) -> None:
    print(f"{YELLOW}[WARNING]{RESET} {msg}")


def log_error(msg: str) -> None:
    print(f"{RED}[ERROR]{RESET} {msg}")


def log_quad(msg: str) -> None:
    print(f"{CYAN}[QUAD]{RESET} {msg}")


def log_scan(msg: str) -> None:
    print(f"{MAGENTA}[SCAN]{RESET} {msg}")


def format_estimate(value: float, error: float) -> str:
    """'value ± error' as printed in summaries and scan progress."""
    return f"{value:.6e} ± {error:.1e}"


def log_unconverged(region: str, panels: int, error: float) -> None:
    log_quad(f"{BOLD}{region}{RESET} not converged after {panels} panels (error {error:.3e}).")


def log_k_rule(what: str, panels: int, step: float, error: float) -> None:
    log_quad(f"{what} k-rule: {panels} panels, h = {step:.3g}, error {error:.2e}")


def log_scan_point(index: int, total: int, carrier: float, value: float, error: float) -> None:
    log_scan(f"{index}/{total} carrier {carrier:.6g}: P = {format_estimate(value, error)}")
