import numpy as np

from services.harness import median_average_regret, run_experiment, run_sweep, sweep_label
from tests.conftest import MONO_SMOKE


async def test_sweep_matches_sequential_runs(make_config):
    configs = [make_config(MONO_SMOKE, seed=s, horizon=512) for s in (1, 2, 3)]
    results = await run_sweep(configs, max_workers=2)
    assert [r.config.seed for r in results] == [1, 2, 3]

    alone = run_experiment(configs[1], write=False)
    assert np.array_equal(results[1].trace.rewards, alone.trace.rewards)
    assert sweep_label(results[0]) == "mono_fw T=512 seed=1"


async def test_median_average_regret_by_horizon(make_config):
    configs = [make_config(MONO_SMOKE, seed=s, horizon=T) for T in (256, 512) for s in (1, 2)]
    results = await run_sweep(configs, max_workers=4)
    medians = median_average_regret(results)
    assert list(medians) == [256, 512]
    expected = np.median([r.summary.average_regret for r in results if r.config.horizon == 256])
    assert medians[256] == expected
