"""The long-time outcome catalog, one preset per regime.

Four qualitatively different fates of the epidemic, each produced by its
preset and recognized by the tail classifier:

  thm-2.10-i        mortality, p >= 1: infection dies out, susceptibles
                    flatten to a positive constant
  thm-2.10-ii       mortality, p < 1: the epidemic drives both densities
                    to zero
  thm-2.11-persist  no mortality, supercritical: both persist at the
                    endemic level
  sis-bistable      superlinear p: the fate depends on the initial split
"""

from sqip import classify_longtime, run
from sqip.presets import preset_config


def describe(name, overrides=None):
    cfg = preset_config(name, overrides)
    traj = run(cfg)
    outcome = classify_longtime(traj, cfg.detect, omega=cfg.omega)
    print(f"\n=== {name} ===")
    print(f"outcome: {outcome.label}")
    if outcome.s_star is not None:
        print(f"flat susceptible level: {outcome.s_star:.6f}")
    if outcome.persistence_floor is not None:
        print(f"measured persistence floor: {outcome.persistence_floor:.6f}")
    tail = outcome.tail_stats
    print(f"tail sup S: {tail['sup_S']:.3e}   tail sup I: {tail['sup_I']:.3e}")
    final = traj.final_state
    print(f"final ranges: S in [{final.S.min():.4g}, {final.S.max():.4g}], "
          f"I in [{final.I.min():.4g}, {final.I.max():.4g}]")
    return outcome


def main():
    describe("thm-2.10-i")
    describe("thm-2.10-ii")
    describe("thm-2.11-persist")

    print("\n*** bistability: same model, two starting splits ***")
    describe("sis-bistable")   # S0 = 0.5 lands in the endemic basin
    describe("sis-bistable", {"initial.S": "constant(0.75)",
                              "initial.I": "constant(0.25)"})


if __name__ == "__main__":
    main()
