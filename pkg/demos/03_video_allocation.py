"""Antenna allocation for progressive video over space-time codes.

With N_u antennas carrying independent streams the encoder rate grows with
N_u, but so does the codeword error probability at a given SNR.  Total
distortion D_e(rate) + D_c(P_e) is minimized by a small integer program over
the allowed N_u values.  The demo uses a synthetic error-probability table
whose behavior is typical of orthogonal vs. spatially-multiplexed designs:
at low SNR the robust low-N_u code wins, at high SNR full multiplexing wins.
"""

from mimodist import (
    CodeErrorTable,
    ParametricRd,
    VideoSourceModel,
    channel_distortion,
    optimize_antennas,
)

RATES = {1: 1.0, 2: 2.0, 4: 4.0, 8: 8.0}  # Mbit/s per allocation
PE_COEFF = {1: 0.05, 2: 0.3, 4: 0.6, 8: 0.9}


def build_table():
    snr_grid = [float(s) for s in range(0, 41, 5)]
    entries = {
        (nu, s): min(0.9, PE_COEFF[nu] * 10.0 ** (-s / 5.0))
        for nu in RATES
        for s in snr_grid
    }
    return CodeErrorTable(entries, tuple(RATES)), snr_grid


def main():
    model = VideoSourceModel(
        rd_curve=ParametricRd(d0=0.01, theta=1.0),  # D_e = 0.01 + 1/R
        beta=0.01,
        gamma=1.0,
        sigma2=1.0,
    )
    table, snr_grid = build_table()

    print("Optimal antenna allocation vs SNR:")
    print(f"  {'SNR (dB)':>9}  {'N_u*':>4}  {'D_e':>9}  {'D_c':>9}  {'total':>9}")
    for snr in snr_grid:
        nu, total = optimize_antennas(model, table, snr, lambda n: RATES[n])
        de = model.rd_curve(RATES[nu])
        dc = channel_distortion(model, table.lookup(nu, snr))
        print(f"  {snr:9.0f}  {nu:4d}  {de:9.5f}  {dc:9.5f}  {total:9.5f}")

    print(
        "\nThe allocation climbs from the single robust stream to full"
        "\nmultiplexing as the SNR improves: once errors are rare, encoder"
        "\nrate is the only thing left to buy."
    )


if __name__ == "__main__":
    main()
