"""Figure rendering for the bench report path.

matplotlib is imported lazily inside the render function so that library
users never pay for (or depend on) a plotting backend; only the CLI report
path touches it.
"""

__all__ = ["render_error_vs_time"]


def render_error_vs_time(records, spectrum, instance_id, path) -> None:
    """Error-versus-time figure for one instance, saved as PNG.

    Left panel: principal angle (log scale) against wall-clock seconds, one
    line per algorithm.  Right panel: the instance's singular spectrum.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_err, ax_spec) = plt.subplots(
        1, 2, figsize=(10, 4), gridspec_kw={"width_ratios": [2.2, 1]}
    )
    for rec in sorted(records, key=lambda r: r.algorithm):
        times = [r.elapsed_seconds for r in rec.trace if r.principal_angle is not None]
        angles = [max(r.principal_angle, 1e-17) for r in rec.trace if r.principal_angle is not None]
        if times:
            ax_err.semilogy(times, angles, label=rec.algorithm, linewidth=1.2)
    ax_err.set_xlabel("time [s]")
    ax_err.set_ylabel("principal angle [rad]")
    ax_err.set_title(f"error vs time: {instance_id}")
    ax_err.legend(fontsize=8)
    ax_err.grid(True, which="both", alpha=0.3)

    ax_spec.semilogy(range(1, len(spectrum) + 1), spectrum, ".", markersize=3)
    ax_spec.set_xlabel("index")
    ax_spec.set_ylabel("singular value")
    ax_spec.set_title("spectrum")
    ax_spec.grid(True, which="both", alpha=0.3)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
