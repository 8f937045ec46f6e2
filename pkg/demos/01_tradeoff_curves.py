"""Diversity-multiplexing tradeoff curves, with and without ARQ.

Walks through the piecewise-linear optimal curve d*(r) for a few antenna
configurations, then shows how an L-round ARQ window stretches the curve
horizontally: the same diversity becomes available at L times the rate.
"""

import numpy as np

from mimodist import ChannelConfig, build_curve, eval_d, short_term_exponent


def show_curve(m, n):
    chan = ChannelConfig(m, n, block_length=m + n - 1)
    curve = build_curve(chan)
    print(f"\n{m}x{n} MIMO, block length T = {chan.block_length} (tight)")
    print("  vertices (r, d*):", ", ".join(f"({r:g}, {d:g})" for r, d in curve.vertices))
    for r in np.linspace(0.0, curve.max_rate, 5):
        print(f"  d*({r:4.2f}) = {eval_d(curve, r):6.3f}")


def show_arq(m, n, windows=(1, 2, 4)):
    chan = ChannelConfig(m, n, block_length=m + n - 1)
    print(f"\nARQ scaling for the {m}x{n} channel: d*(r, L) = d*(r / L)")
    r_probe = 1.5
    for window in windows:
        curve = build_curve(chan, arq_window=window)
        d_long = eval_d(curve, r_probe)
        d_short = short_term_exponent(curve, r_probe)
        print(
            f"  L = {window}: domain [0, {curve.max_rate:g}], "
            f"d*({r_probe}) = {d_long:5.3f} (long-term), "
            f"{d_short:5.3f} (short-term)"
        )


def main():
    for m, n in ((1, 1), (2, 2), (4, 4), (2, 4)):
        show_curve(m, n)
    show_arq(2, 2)
    print(
        "\nEven a two-round window more than doubles the diversity at a fixed"
        "\nrate in the long-term static model - retransmissions are rare, so"
        "\nthe rate penalty vanishes while the decoder sees twice the "
        "observations."
    )


if __name__ == "__main__":
    main()
