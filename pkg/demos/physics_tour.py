"""Walk through the folding-to-capacitance model on a default accordion patch.

Run: python demos/physics_tour.py
"""

import numpy as np

from foldcap.kinematics import default_pattern, extract_primitives, pose_state
from foldcap.physics import (
    FrontendConfig, IdealCurveConstants, cap_to_freq, channel_capacitances, freq_to_cap, patch_volume, segment_cap,
    segment_volume,
)


def main():
    cfg = FrontendConfig()
    print(f"front end: L = {cfg.inductance_L * 1e6:.1f} uH, C0 = {cfg.fixed_cap_C0 * 1e12:.0f} pF")
    print(f"13.70 MHz reads as {freq_to_cap(13.7e6, cfg) * 1e12:.2f} pF\n")

    # one tilted segment: capacitance falls and volume peaks as it rises
    a, w = 0.01, 0.02
    k = IdealCurveConstants.from_patch(a, w)
    print("rise (mm)  C (pF)   V (cm^3)")
    for h in np.linspace(0.5e-3, 9.5e-3, 7):
        print(f"{h * 1e3:8.2f}  {segment_cap(a, w, h) * 1e12:6.3f}   {segment_volume(a, w, h) * 1e6:.4f}")
    print(f"ideal-curve constants: k1={k.k1:.3e} k2={k.k2:.3e} k3={k.k3:.1f}\n")

    # the whole patch: unfolding raises every channel toward the flat value
    p = default_pattern("accordion-r")
    print("deploy  top/base/diag (cm)        volume (cm^3)  ch0 freq (MHz)")
    for e in np.linspace(0.0, 1.0, 6):
        st = pose_state(p, e, e)
        prim = extract_primitives(p, st).as_array()
        cap = channel_capacitances(p, st.top_profile, st.bottom_profile)
        print(f"{e:5.1f}   {prim[0]:6.2f} {prim[1]:6.2f} {prim[2]:6.2f}"
              f"      {patch_volume(p, st) * 1e6:8.2f}      {cap_to_freq(cap[0], cfg) / 1e6:.4f}")


if __name__ == "__main__":
    main()
