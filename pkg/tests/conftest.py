import numpy as np
import pytest

from strokeseg import backend, network, phantom

# Analytic detector gains used by the phantom-based suites. The conv bias
# suppresses brain/background scores so only bright-DWI-dark-ADC regions
# survive the ReLU; the steep FC turns the tiny global-average lesion signal
# into a confident slice classification while artifact-only and clean slices
# stay below 0.5.
ANALYTIC_GAINS = dict(dwi_w=1.0, adc_w=-1.0, bias=-2.0,
                      fc_weight=1000.0, fc_bias=-4.0)


def small_config() -> network.NetworkConfig:
    """Slim seven-block config sized for the desk-scale phantom suites."""
    return network.NetworkConfig(
        blocks=[network.ConvBlockSpec(1, 8)] * 7,
        pool_after=frozenset({2, 4}),
        side_head_block=4,
        main_head_block=7,
    )


@pytest.fixture(scope="session")
def slim_cfg():
    return small_config()


@pytest.fixture(scope="session")
def analytic_bundle(slim_cfg):
    return phantom.make_analytic_weights(slim_cfg, **ANALYTIC_GAINS)


def make_phantom_spec(seed: int, with_artifact: bool, nz: int = 13,
                      noise_sigma: float = 15.0) -> phantom.PhantomSpec:
    """Seeded single/double-lesion phantom with healthy slice cross-sections."""
    rng = np.random.default_rng(seed)
    z_lo, z_hi = max(2, nz // 2 - 2), min(nz - 2, nz // 2 + 3)
    # lesions sit in the lower half-plane, artifacts in the upper, far enough
    # apart that the generator's overlap rejection can never fire
    lesions = [phantom.SphereSpec(
        center=(int(rng.integers(z_lo, z_hi)),
                float(rng.integers(75, 120)),
                float(rng.integers(60, 90))),
        radius_mm=float(rng.uniform(9.0, 14.0)),
    )]
    if rng.random() < 0.5:
        lesions.append(phantom.SphereSpec(
            center=(int(rng.integers(z_lo, z_hi)),
                    float(rng.integers(75, 120)),
                    float(rng.integers(120, 150))),
            radius_mm=float(rng.uniform(8.0, 11.0)),
        ))
    artifacts = []
    if with_artifact:
        artifacts.append(phantom.SphereSpec(
            center=(int(rng.integers(2, nz - 2)),
                    float(rng.integers(35, 55)),
                    float(rng.integers(90, 120))),
            radius_mm=float(rng.uniform(5.0, 8.0)),
        ))
    return phantom.PhantomSpec(dims=(nz, 192, 192), lesions=lesions,
                               artifacts=artifacts, noise_sigma=noise_sigma,
                               seed=seed)


@pytest.fixture(params=["numba", "numpy"])
def kernel_backend(request):
    """Run a test under each kernel backend, restoring the default after."""
    name = request.param
    if name == "numba" and not backend.HAVE_NUMBA:
        pytest.skip("numba not installed")
    previous = backend.set_backend(name)
    yield name
    backend.set_backend(previous)
