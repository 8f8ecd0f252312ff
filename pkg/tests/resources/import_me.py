from dope.density_models import FixedVarianceGaussian


class WideGaussian(FixedVarianceGaussian):
    """
    Fixed-variance Gaussian registered from outside the package, for the model import tests.
    """

    family = "wide_gaussian"

    def __init__(self, feature_map, n_actions, dim=1, bounds=None, sigma=0.5):
        super().__init__(feature_map, n_actions, dim, bounds, sigma)


def not_a_model():
    return
