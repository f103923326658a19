from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Tuple

import numpy as np

from ..errors import ArityError
from ..geometry.cones import GammaFactor, gamma_polyhedron
from ..geometry.polyhedron import Polyhedron
from .nodes import BinOp, Const, Expr, evaluate, evaluate_masked, grad


@dataclass(frozen=True)
class ParametricProblem:
    """
    The problem min_y f(x, y) s.t. P(x, y) in Gamma, y in a box.

    Attributes:
        name (str): Problem name from the file header.
        n (int): Parameter dimension.
        m (int): Decision dimension.
        objective (Expr): f over x1..xn, y1..ym.
        constraints (Tuple[Expr, ...]): Components of P, one per Gamma row.
        gamma (Tuple[GammaFactor, ...]): Factors of Gamma in row order.
        y_lower (Tuple[float, ...]): Lower corner of the decision box.
        y_upper (Tuple[float, ...]): Upper corner of the decision box.
    """

    name: str
    n: int
    m: int
    objective: Expr
    constraints: Tuple[Expr, ...]
    gamma: Tuple[GammaFactor, ...]
    y_lower: Tuple[float, ...]
    y_upper: Tuple[float, ...]

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        rows = sum(f.count for f in self.gamma)
        if rows != len(self.constraints):
            raise ArityError(
                f"Gamma has dimension {rows} but {len(self.constraints)} constraint expressions are given"
            )
        if len(self.y_lower) != self.m or len(self.y_upper) != self.m:
            raise ArityError(f"box must have {self.m} coordinates")
        if any(not lo < hi for lo, hi in zip(self.y_lower, self.y_upper)):
            raise ValueError("y_box must have positive volume")
        declared = set(self.x_names) | set(self.y_names)
        for e in (self.objective,) + tuple(self.constraints):
            unknown = e.variables() - declared
            if unknown:
                raise ValueError(f"undeclared variables: {sorted(unknown)}")

    @property
    def p(self) -> int:
        return len(self.constraints)

    @property
    def x_names(self) -> Tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.n))

    @property
    def y_names(self) -> Tuple[str, ...]:
        return tuple(f"y{i + 1}" for i in range(self.m))

    @property
    def smoothness(self) -> Tuple[bool, ...]:
        """Smoothness flag of the objective followed by each constraint."""
        return tuple(e.is_smooth for e in (self.objective,) + tuple(self.constraints))

    @property
    def is_smooth(self) -> bool:
        return all(self.smoothness)

    @cached_property
    def gamma_set(self) -> Polyhedron:
        if not self.gamma:
            return Polyhedron.whole(1)
        return gamma_polyhedron(self.gamma)

    @property
    def box_lower(self) -> np.ndarray:
        return np.asarray(self.y_lower, dtype=float)

    @property
    def box_upper(self) -> np.ndarray:
        return np.asarray(self.y_upper, dtype=float)

    @property
    def constraints_depend_on_parameter(self) -> bool:
        xs = set(self.x_names)
        return any(e.variables() & xs for e in self.constraints)

    def point(self, x: np.ndarray, y: np.ndarray) -> Dict[str, float]:
        env = {name: float(v) for name, v in zip(self.x_names, np.atleast_1d(x))}
        env.update({name: float(v) for name, v in zip(self.y_names, np.atleast_1d(y))})
        return env

    def _grid_env(self, x: np.ndarray, Y: np.ndarray) -> Dict[str, np.ndarray]:
        env: Dict[str, np.ndarray] = {
            name: np.full(Y.shape[0], float(v)) for name, v in zip(self.x_names, x)
        }
        env.update({name: Y[:, i] for i, name in enumerate(self.y_names)})
        return env

    def objective_values(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """f(x, y) for every row of Y; NaN where f is undefined."""
        Y = np.atleast_2d(Y)
        value = evaluate_masked(self.objective, self._grid_env(np.atleast_1d(x), Y))
        return np.broadcast_to(value, (Y.shape[0],)).astype(float)

    def constraint_values(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """P(x, y) for every row of Y, shape (len(Y), p)."""
        Y = np.atleast_2d(Y)
        env = self._grid_env(np.atleast_1d(x), Y)
        if not self.constraints:
            return np.zeros((Y.shape[0], 0))
        cols = [
            np.broadcast_to(evaluate_masked(e, env), (Y.shape[0],))
            for e in self.constraints
        ]
        return np.stack(cols, axis=1).astype(float)

    def residuals(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Inequality residuals (A z - b) and equality residuals |E z - f| of P-values Z."""
        G = self.gamma_set
        ineq = Z @ G.A.T - G.b if G.n_ineqs else np.zeros((Z.shape[0], 0))
        eq = np.abs(Z @ G.E.T - G.f) if G.n_eqs else np.zeros((Z.shape[0], 0))
        return ineq, eq

    def violation(
        self, x: np.ndarray, Y: np.ndarray, eq_tol: float = 1e-9
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Constraint violation and feasibility mask for every row of Y.

        Inequalities are tested exactly, equalities within `eq_tol`; rows where
        P is undefined get infinite violation.
        """
        Y = np.atleast_2d(Y)
        if not self.constraints:
            zero = np.zeros(Y.shape[0])
            return zero, np.ones(Y.shape[0], dtype=bool)
        Z = self.constraint_values(x, Y)
        ineq, eq = self.residuals(Z)
        parts = [np.zeros(Y.shape[0])]
        if ineq.shape[1]:
            parts.append(np.max(np.maximum(ineq, 0.0), axis=1))
        if eq.shape[1]:
            parts.append(np.max(eq, axis=1))
        viol = np.max(np.stack(parts, axis=1), axis=1)
        feasible = np.ones(Y.shape[0], dtype=bool)
        if ineq.shape[1]:
            feasible &= np.all(ineq <= 0.0, axis=1)
        if eq.shape[1]:
            feasible &= np.all(eq <= eq_tol, axis=1)
        bad = ~np.all(np.isfinite(Z), axis=1)
        viol = np.where(bad, np.inf, viol)
        feasible &= ~bad
        return viol, feasible

    def P(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        env = self.point(x, y)
        return np.array([evaluate(e, env) for e in self.constraints])

    def f(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(evaluate(self.objective, self.point(x, y)))

    def objective_gradient(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(grad_x f, grad_y f) at (x, y)."""
        env = self.point(x, y)
        g = grad(self.objective, env, self.x_names + self.y_names)
        return g[: self.n], g[self.n:]

    def jacobian(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(J_x P, J_y P) at (x, y), shapes (p, n) and (p, m)."""
        env = self.point(x, y)
        names = self.x_names + self.y_names
        J = np.array([grad(e, env, names) for e in self.constraints]).reshape(self.p, self.n + self.m)
        return J[:, : self.n], J[:, self.n:]

    def with_objective_scaled(self, c: float) -> "ParametricProblem":
        return ParametricProblem(
            name=self.name,
            n=self.n,
            m=self.m,
            objective=BinOp("*", Const(float(c)), self.objective),
            constraints=self.constraints,
            gamma=self.gamma,
            y_lower=self.y_lower,
            y_upper=self.y_upper,
        )
