"""Build a filter plan from degradation flags and watch each step work.

Run from the repository root:

    python3 demos/03_classical_enhancement.py
"""

from aquaclear import (
    DegradationFlags,
    apply_plan,
    build_plan,
    channel_stats,
    classify,
    laplacian_variance,
    make_archetype,
    uciqe,
    uiqm,
)

# A blue-cast, dark, blurred frame. This is the worst of the eight cases.
img = make_archetype(DegradationFlags(True, True, True), seed=7, size=64)
flags, category = classify(img)
print(f"input classified as rank {category.rank}: {category.description}")

plan = build_plan(flags)
print(f"plan steps: {plan.kinds()}\n")

# The hook receives every intermediate image, handy for tracing.
def trace(index, kind, intermediate):
    stats = channel_stats(intermediate)
    lap = laplacian_variance(intermediate)
    print(
        f"  after {kind.value:<11} means=({stats.mean_r:.3f}, {stats.mean_g:.3f}, "
        f"{stats.mean_b:.3f})  lap_var={lap:.6f}"
    )

stats = channel_stats(img)
print(
    f"  input             means=({stats.mean_r:.3f}, {stats.mean_g:.3f}, "
    f"{stats.mean_b:.3f})  lap_var={laplacian_variance(img):.6f}"
)
enhanced = apply_plan(img, plan, on_step=trace)

# Quality moves in the right direction on both no-reference metrics.
before_uciqe, before_uiqm = uciqe(img)[0], uiqm(img)[0]
after_uciqe, after_uiqm = uciqe(enhanced)[0], uiqm(enhanced)[0]
print(f"\nUCIQE {before_uciqe:.4f} -> {after_uciqe:.4f}")
print(f"UIQM  {before_uiqm:.4f} -> {after_uiqm:.4f}")
