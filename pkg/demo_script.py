import numpy as np

from rwdre import (
    EnvironmentKind,
    EnvironmentSpec,
    RandomSource,
    check_non_crossing,
    choose_endpoint,
    exact_speed,
    mirror_asymmetry_stat,
)
from rwdre.coupling import couple
from rwdre.manifest import write_pair_csv

east = EnvironmentSpec(kind=EnvironmentKind.EAST_RANDOM_SCAN, L=6, p=0.7)

# the exact speed at +eps and -eps
plus = exact_speed(east, 0.25)
minus = exact_speed(east, -0.25)
print(f"v(+0.25) = {plus.exact_speed:.12f}")
print(f"v(-0.25) = {minus.exact_speed:.12f}")
print(f"sum      = {plus.exact_speed + minus.exact_speed:.3e}")

# east is reversible but not mirror-symmetric
print("mirror statistic:", mirror_asymmetry_stat(east, 1))

# forward and backward walks on one direction field never cross
N = 200
x = choose_endpoint(plus.exact_speed, 0.05, N)
src = RandomSource(2023).for_trials(np.arange(1000))
pair = couple(east, src, 0.25, N, x)
products = check_non_crossing(pair)
print(f"endpoint {x}: {np.sum(products < 0)} crossings in {len(products)} pairs")
print(
    "backward walk at time 0 lies left of the origin in",
    np.mean(pair.backward.positions[:, 0] <= pair.forward.positions[:, 0]),
    "of pairs",
)

# the first few pairs, for plotting
path = write_pair_csv(
    "rwdre-out/pairs.csv", pair.forward.positions[:5], pair.backward.positions[:5]
)
print("pairs written to", path)
