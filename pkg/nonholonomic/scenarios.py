"""
Registry of ready-to-run systems.

Each scenario validates its parameters with a serializer, builds a
``SystemSpec`` or ``ReducedSystemSpec`` and supplies a matching initial state.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .algebra import LieAlgebraSpec
from .conf import get_tolerances
from .exceptions import InvalidParams, UnknownScenario
from .geometry import BoundarySpec, ChartSpec, DistributionSpec
from .lagrangian import LagrangianSpec, PontryaginState
from .reduction import (
    AlgebraLagrangian,
    BundleLayout,
    ReducedLagrangianSpec,
    ReducedState,
    ReducedSystemSpec,
    euler_poincare_suslov_system,
)
from .system import SystemSpec
from .validators import pole_distance

logger = logging.getLogger(__name__)

FULL = "full"
REDUCED = "reduced"
COMPARE = "compare"
EPS = "eps"
MODES = (FULL, REDUCED, COMPARE, EPS)


@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    params_serializer: type
    builder: Callable
    initial_state: Callable
    modes: tuple
    default_t_final: float
    default_h: float
    partner: Callable | None = None
    layout: Callable | None = None
    sample_box: tuple = ()
    reference: bool = True

    @property
    def default_mode(self):
        return self.modes[0]

    @property
    def reducible(self):
        return self.partner is not None


@dataclass(frozen=True)
class ScenarioParams:
    name: str
    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def _angle_guard(index):
    def guard(x, tolerances):
        theta = float(x[index])
        if pole_distance(theta) < tolerances.angle_guard:
            return f"theta={theta:.6f} is within {tolerances.angle_guard} of a multiple of pi"
        return ""

    return guard


# free_billiard


def build_free_billiard(params):
    m = params["mass"]
    r = params["radius"]
    return SystemSpec(
        chart=ChartSpec.euclidean(("x", "y")),
        lagrangian_spec=LagrangianSpec(
            L=lambda q, v: 0.5 * m * float(v @ v),
            dL_dv=lambda q, v: m * v,
            dL_dq=lambda q, v: np.zeros(2),
            d2L_dvdv=lambda q, v: m * np.eye(2),
            d2L_dvdq=lambda q, v: np.zeros((2, 2)),
        ),
        distribution=DistributionSpec.unconstrained(),
        boundary=BoundarySpec(
            b=lambda q: float(q @ q) - r * r,
            db=lambda q: 2.0 * q,
        ),
        name="free_billiard",
        metadata={"reference": False},
    )


def free_billiard_state(system, params):
    q = np.array([params["x0"], params["y0"]])
    v = np.array([params["vx0"], params["vy0"]])
    return PontryaginState(t=0.0, q=q, v=v, p=system.momentum(q, v))


# rolling_disk


def build_rolling_disk(params):
    m = params["mass"]
    inertia_theta = params["inertia_theta"]
    inertia_phi = params["inertia_phi"]
    R = params["radius"]
    mass_matrix = np.diag([m, m, inertia_theta, inertia_phi])

    def mu(q):
        phi = q[3]
        return np.array(
            [
                [1.0, 0.0, -R * np.cos(phi), 0.0],
                [0.0, 1.0, -R * np.sin(phi), 0.0],
            ]
        )

    def dmu(q):
        phi = q[3]
        out = np.zeros((2, 4, 4))
        out[0, 2, 3] = R * np.sin(phi)
        out[1, 2, 3] = -R * np.cos(phi)
        return out

    def b(q):
        x, y, _, phi = q
        return (x + R * np.cos(phi)) ** 2 + (y + R * np.sin(phi)) ** 2 - 1.0

    def db(q):
        x, y, _, phi = q
        return 2.0 * np.array(
            [
                x + R * np.cos(phi),
                y + R * np.sin(phi),
                0.0,
                R * (-x * np.sin(phi) + y * np.cos(phi)),
            ]
        )

    return SystemSpec(
        chart=ChartSpec(
            dim=4,
            coord_names=("x", "y", "theta", "phi"),
            periodic=(False, False, True, True),
        ),
        lagrangian_spec=LagrangianSpec(
            L=lambda q, v: 0.5 * float(v @ mass_matrix @ v),
            dL_dv=lambda q, v: mass_matrix @ v,
            dL_dq=lambda q, v: np.zeros(4),
            d2L_dvdv=lambda q, v: mass_matrix,
            d2L_dvdq=lambda q, v: np.zeros((4, 4)),
        ),
        distribution=DistributionSpec(m=2, mu=mu, dmu=dmu),
        boundary=BoundarySpec(b=b, db=db),
        name="rolling_disk",
        metadata={"reference": True},
    )


def rolling_disk_state(system, params):
    R = params["radius"]
    phi = params["phi0"]
    theta_dot = params["theta_dot0"]
    q = np.array([params["x0"], params["y0"], params["theta0"], phi])
    v = np.array([R * theta_dot * np.cos(phi), R * theta_dot * np.sin(phi), theta_dot, params["phi_dot0"]])
    return PontryaginState(t=0.0, q=q, v=v, p=system.momentum(q, v))


# spherical_pendulum


def pendulum_constraint(epsilon):
    """``f(theta) = 1 + epsilon sin^2(theta)`` and its derivative."""

    def f(theta):
        return 1.0 + epsilon * np.sin(theta) ** 2

    def df(theta):
        return 2.0 * epsilon * np.sin(theta) * np.cos(theta)

    return f, df


def build_spherical_pendulum(params):
    m = params["mass"]
    length = params["length"]
    g = params["gravity"]
    wall = params["wall_radius"]
    scale = m * length * length
    f, df = pendulum_constraint(params["epsilon"])

    def L(q, v):
        s, c = np.sin(q[0]), np.cos(q[0])
        return 0.5 * scale * (v[0] ** 2 + v[1] ** 2 * s * s) - m * g * length * c

    def dL_dv(q, v):
        s = np.sin(q[0])
        return scale * np.array([v[0], v[1] * s * s])

    def dL_dq(q, v):
        s, c = np.sin(q[0]), np.cos(q[0])
        return np.array([scale * v[1] ** 2 * s * c + m * g * length * s, 0.0])

    def d2L_dvdv(q, v):
        s = np.sin(q[0])
        return scale * np.diag([1.0, s * s])

    def d2L_dvdq(q, v):
        s, c = np.sin(q[0]), np.cos(q[0])
        out = np.zeros((2, 2))
        out[1, 0] = 2.0 * scale * v[1] * s * c
        return out

    if params["constrained"]:
        distribution = DistributionSpec(
            m=1,
            mu=lambda q: np.array([[f(q[0]), -1.0]]),
            dmu=lambda q: np.array([[[df(q[0]), 0.0], [0.0, 0.0]]]),
        )
    else:
        distribution = DistributionSpec.unconstrained()

    return SystemSpec(
        chart=ChartSpec(dim=2, coord_names=("theta", "phi"), periodic=(False, True)),
        lagrangian_spec=LagrangianSpec(L=L, dL_dv=dL_dv, dL_dq=dL_dq, d2L_dvdv=d2L_dvdv, d2L_dvdq=d2L_dvdq),
        distribution=distribution,
        boundary=BoundarySpec(
            b=lambda q: length * np.sin(q[0]) - wall,
            db=lambda q: np.array([length * np.cos(q[0]), 0.0]),
        ),
        layout=spherical_pendulum_layout(params),
        guard=_angle_guard(0),
        name="spherical_pendulum",
        metadata={"reference": True, "constrained": params["constrained"]},
    )


def spherical_pendulum_state(system, params):
    theta = params["theta0"]
    theta_dot = params["theta_dot0"]
    if params["constrained"]:
        f, _ = pendulum_constraint(params["epsilon"])
        phi_dot = f(theta) * theta_dot
    else:
        phi_dot = params["phi_dot0"]
    q = np.array([theta, params["phi0"]])
    v = np.array([theta_dot, phi_dot])
    return PontryaginState(t=0.0, q=q, v=v, p=system.momentum(q, v))


def spherical_pendulum_layout(params):
    if params["constrained"]:
        f, _ = pendulum_constraint(params["epsilon"])
        return BundleLayout(shape=(0,), group=(1,), connection=lambda sigma: np.array([[f(sigma[0])]]))
    return BundleLayout(shape=(0,), group=(1,))


def spherical_pendulum_partner(params):
    """Scenario name and parameters of the reduced pendulum matching this pendulum."""
    return "reduced_pendulum", {
        "mass": params["mass"],
        "length": params["length"],
        "gravity": params["gravity"],
        "epsilon": params["epsilon"],
        "wall_radius": params["wall_radius"],
        "connection": "adapted" if params["constrained"] else "trivial",
        "theta0": params["theta0"],
        "theta_dot0": params["theta_dot0"],
        "xi0": 0.0 if params["constrained"] else params["phi_dot0"],
    }


# reduced_pendulum


def build_reduced_pendulum(params):
    m = params["mass"]
    length = params["length"]
    g = params["gravity"]
    wall = params["wall_radius"]
    scale = m * length * length
    adapted = params["connection"] == "adapted"
    f, df = pendulum_constraint(params["epsilon"])

    def A(theta):
        return f(theta) if adapted else 0.0

    def dA(theta):
        return df(theta) if adapted else 0.0

    # P = xi + A u is the full angular velocity about the axis
    def ell(sigma, u, xi):
        theta = sigma[0]
        s, c = np.sin(theta), np.cos(theta)
        P = xi[0] + A(theta) * u[0]
        return 0.5 * scale * (u[0] ** 2 + P * P * s * s) - m * g * length * c

    def dell_dsigma(sigma, u, xi):
        theta = sigma[0]
        s, c = np.sin(theta), np.cos(theta)
        P = xi[0] + A(theta) * u[0]
        return np.array([scale * (P * s * s * dA(theta) * u[0] + P * P * s * c) + m * g * length * s])

    def dell_du(sigma, u, xi):
        theta = sigma[0]
        s = np.sin(theta)
        P = xi[0] + A(theta) * u[0]
        return np.array([scale * (u[0] + A(theta) * P * s * s)])

    def dell_dxi(sigma, u, xi):
        theta = sigma[0]
        s = np.sin(theta)
        P = xi[0] + A(theta) * u[0]
        return np.array([scale * P * s * s])

    def d2ell_dw2(sigma, u, xi):
        theta = sigma[0]
        s2 = np.sin(theta) ** 2
        a = A(theta)
        return scale * np.array([[1.0 + a * a * s2, a * s2], [a * s2, s2]])

    def d2ell_dwdsigma(sigma, u, xi):
        theta = sigma[0]
        s, c = np.sin(theta), np.cos(theta)
        a, da = A(theta), dA(theta)
        P = xi[0] + a * u[0]
        return scale * np.array(
            [
                [da * P * s * s + a * da * u[0] * s * s + 2.0 * a * P * s * c],
                [da * u[0] * s * s + 2.0 * P * s * c],
            ]
        )

    return ReducedSystemSpec(
        sigma_dim=1,
        algebra=LieAlgebraSpec.abelian(1, name="so2"),
        lagrangian_spec=ReducedLagrangianSpec(
            ell=ell,
            dell_dsigma=dell_dsigma,
            dell_du=dell_du,
            dell_dxi=dell_dxi,
            d2ell_dw2=d2ell_dw2,
            d2ell_dwdsigma=d2ell_dwdsigma,
        ),
        delta_sigma=DistributionSpec.unconstrained(),
        boundary=BoundarySpec(
            b=lambda sigma: length * np.sin(sigma[0]) - wall,
            db=lambda sigma: np.array([length * np.cos(sigma[0])]),
        ),
        delta_g=(lambda sigma: np.array([[1.0]])) if adapted else None,
        vertical_constraints=1 if adapted else 0,
        connection=(lambda sigma: np.array([[f(sigma[0])]])) if adapted else None,
        vertical_mode=params.get("vertical_mode", "well_posed"),
        guard=_angle_guard(0),
        name="reduced_pendulum",
        metadata={"reference": True, "connection": params["connection"]},
    )


def reduced_pendulum_state(system, params):
    sigma = np.array([params["theta0"]])
    u = np.array([params["theta_dot0"]])
    xi = np.array([params["xi0"]])
    p = system.momentum(sigma, np.concatenate([u, xi]))
    return ReducedState(t=0.0, sigma=sigma, u=u, y=p[:1], xi=xi, rho=p[1:])


# rigid_body_suslov


def inertia_tensor(params):
    return np.array(
        [
            [params["inertia_1"], params["product_12"], params["product_13"]],
            [params["product_12"], params["inertia_2"], params["product_23"]],
            [params["product_13"], params["product_23"], params["inertia_3"]],
        ]
    )


def build_rigid_body_suslov(params):
    inertia = inertia_tensor(params)
    lagrangian = AlgebraLagrangian(
        ell=lambda xi: 0.5 * float(xi @ inertia @ xi),
        dell_dxi=lambda xi: inertia @ xi,
        d2ell_dxidxi=lambda xi: inertia,
    )
    d = np.array([[0.0, 0.0, 1.0]]) if params["suslov"] else np.zeros((0, 3))
    return euler_poincare_suslov_system(
        LieAlgebraSpec.so3(),
        lagrangian,
        d,
        name="rigid_body_suslov",
        vertical_mode=params.get("vertical_mode", "well_posed"),
        metadata={"reference": False, "suslov": params["suslov"]},
    )


def rigid_body_suslov_state(system, params):
    xi = np.array(params["xi0"], dtype=float)
    rho = system.momentum(np.zeros(0), xi)
    return ReducedState(t=0.0, sigma=np.zeros(0), u=np.zeros(0), y=np.zeros(0), xi=xi, rho=rho)


def _registry():
    # Imported here: the serializers validate scenario names against this module
    from . import serializers

    scenarios = [
        Scenario(
            name="free_billiard",
            description="Free particle in a disk with elastic walls",
            params_serializer=serializers.FreeBilliardParamsSerializer,
            builder=build_free_billiard,
            initial_state=free_billiard_state,
            modes=(FULL,),
            default_t_final=10.0,
            default_h=1e-3,
            sample_box=((-0.7, 0.7), (-0.7, 0.7)),
            reference=False,
        ),
        Scenario(
            name="rolling_disk",
            description="Vertical disk rolling without slipping inside a circular wall",
            params_serializer=serializers.RollingDiskParamsSerializer,
            builder=build_rolling_disk,
            initial_state=rolling_disk_state,
            modes=(FULL,),
            default_t_final=10.0,
            default_h=1e-3,
            sample_box=((-0.5, 0.5), (-0.5, 0.5), (-3.0, 3.0), (-3.0, 3.0)),
        ),
        Scenario(
            name="spherical_pendulum",
            description="Spherical pendulum with v_phi = f(theta) v_theta and a cylindrical wall",
            params_serializer=serializers.SphericalPendulumParamsSerializer,
            builder=build_spherical_pendulum,
            initial_state=spherical_pendulum_state,
            modes=(FULL, COMPARE),
            default_t_final=10.0,
            default_h=1e-3,
            partner=spherical_pendulum_partner,
            layout=spherical_pendulum_layout,
            sample_box=((0.2, 0.6), (-3.0, 3.0)),
        ),
        Scenario(
            name="reduced_pendulum",
            description="Spherical pendulum reduced by rotations about the vertical axis",
            params_serializer=serializers.ReducedPendulumParamsSerializer,
            builder=build_reduced_pendulum,
            initial_state=reduced_pendulum_state,
            modes=(REDUCED,),
            default_t_final=10.0,
            default_h=1e-3,
            sample_box=((0.2, 0.6),),
        ),
        Scenario(
            name="rigid_body_suslov",
            description="Rigid body on so(3), optionally with the Suslov constraint xi_3 = 0",
            params_serializer=serializers.RigidBodySuslovParamsSerializer,
            builder=build_rigid_body_suslov,
            initial_state=rigid_body_suslov_state,
            modes=(EPS, REDUCED),
            default_t_final=10.0,
            default_h=1e-3,
            reference=False,
        ),
    ]
    return {scenario.name: scenario for scenario in scenarios}


_SCENARIOS = None


def registry():
    global _SCENARIOS  # pylint: disable=global-statement
    if _SCENARIOS is None:
        _SCENARIOS = _registry()
    return _SCENARIOS


def get_scenario(name):
    try:
        return registry()[name]
    except KeyError:
        raise UnknownScenario(f"Unknown scenario {name!r}", name=name) from None


def scenario_names():
    return sorted(registry())


def validate_params(name, params=None):
    """Validated parameters with defaults filled in."""
    # pylint: disable=import-outside-toplevel
    from .serializers import validation_message

    scenario = get_scenario(name)
    serializer = scenario.params_serializer(data=params or {})
    if not serializer.is_valid():
        field_name, message = validation_message(serializer.errors)
        raise InvalidParams(
            f"{name}.{field_name}: {message}",
            field=f"scenario.params.{field_name}",
            errors=serializer.errors,
        )
    return ScenarioParams(name=name, values=dict(serializer.validated_data))


def build(name, params=None, vertical_mode=None):
    """Build the system for scenario ``name``."""
    scenario = get_scenario(name)
    validated = validate_params(name, params)
    values = dict(validated.values)
    if vertical_mode is not None:
        values["vertical_mode"] = vertical_mode
    system = scenario.builder(values)
    logger.debug(f"Built scenario {name} ({system.mode})")
    return system


def initial_state(name, system, params=None):
    """Initial state matching ``build(name, params)``; checks the pole guard."""
    scenario = get_scenario(name)
    validated = validate_params(name, params)
    state = scenario.initial_state(system, validated.values)
    reason = system.guard(state.x, get_tolerances()) if getattr(system, "guard", None) else ""
    if reason:
        raise InvalidParams(reason, field="scenario.params.theta0")
    return state


def list_scenarios():
    """Names, descriptions and parameter schemas in sorted order."""
    # pylint: disable=import-outside-toplevel
    from .serializers import describe_serializer

    return [
        {
            "name": scenario.name,
            "description": scenario.description,
            "modes": list(scenario.modes),
            "reference": scenario.reference,
            "default_t_final": scenario.default_t_final,
            "default_h": scenario.default_h,
            "params": describe_serializer(scenario.params_serializer),
        }
        for scenario in (registry()[name] for name in scenario_names())
    ]


def sample_points(name, system, count=8, seed=0):
    """Deterministic interior sample positions for structural checks."""
    box = np.asarray(get_scenario(name).sample_box, dtype=float).reshape(-1, 2)
    if box.shape[0] == 0:
        return [np.zeros(0)]
    rng = np.random.default_rng(seed)
    points = []
    attempts = 0
    while len(points) < count and attempts < 100 * count:
        attempts += 1
        candidate = rng.uniform(box[:, 0], box[:, 1])
        if system.boundary_value(candidate) < 0.0:
            points.append(candidate)
    return points
