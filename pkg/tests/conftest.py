import json
import math

import numpy as np
import pytest

from damplab import hopf, swing

ROOT3 = math.sqrt(3.0)
OMEGA_CASE1 = math.sqrt(1.5)

#: Flow Jacobian of the lossless three-machine demo at its equilibrium.
L_CASE1 = np.array(
    [[1.0, -0.5, -0.5], [-0.5, 1.0, -0.5], [-0.5, -0.5, 1.0]]
)


@pytest.fixture(scope="session")
def case1():
    model = swing.demo_lossless_three_machine(0.0)
    eq = model.solve_equilibrium([0.1, 1.0, 1.0])
    return model, eq


@pytest.fixture(scope="session")
def case2():
    model = swing.demo_lossy_two_machine(0.2)
    eq = model.equilibrium_at(np.array([1.4905, 0.0]))
    return model, eq


def grid_damping_path(base_model, eq, damping_of_vec, derivative_vec,
                      gamma_range):
    """Referenced damping path for a diagonal damping family of a grid model."""
    system = base_model.to_second_order()
    stiffness = system.jac(eq.delta0)

    def damping_of(g):
        return np.diag(damping_of_vec(g)) / base_model.omega_s

    def damping_derivative(g):
        return np.diag(derivative_vec(g)) / base_model.omega_s

    def rhs_of(g):
        frozen = base_model.with_damping(damping_of_vec(g))
        ref = frozen.referenced(eq)
        return lambda x: ref.rhs(0.0, x)

    return hopf.DampingPath(
        inertia=system.inertia,
        stiffness=stiffness,
        damping_of=damping_of,
        damping_derivative=damping_derivative,
        gamma_range=gamma_range,
        referenced=True,
        rhs_of=rhs_of,
        x0=base_model.referenced(eq).equilibrium_state,
    )


@pytest.fixture(scope="session")
def case1_path(case1):
    model, eq = case1
    return grid_damping_path(
        model, eq,
        lambda g: np.array([g, g, 1.5]),
        lambda g: np.array([1.0, 1.0, 0.0]),
        (0.0, 0.5),
    )


@pytest.fixture(scope="session")
def case2_path(case2):
    model, eq = case2
    return grid_damping_path(
        model, eq,
        lambda g: np.array([g, 1.0]),
        lambda g: np.array([1.0, 0.0]),
        (0.1, 0.3),
    )


@pytest.fixture()
def model_file(tmp_path):
    """Write a grid model dict to a JSON file and return its path."""

    def write(data, name="model.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)

    return write
