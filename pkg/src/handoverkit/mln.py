"""Weighted clausal relational model over finite domains.

Formulas are disjunctive clauses with typed arguments; variables carry a
``?`` prefix. Semantics follow the standard log-linear form: a truth
assignment x over all ground atoms has unnormalized score
sum_i w_i * n_i(x), with n_i the number of satisfied groundings of clause i.

Learning maximizes the pseudo-log-likelihood (each atom conditioned on the
rest of its world), which is concave in the weights, with an optional
Gaussian prior. Exact queries (partition, MAP) are intended for the compact
models this package builds; they refuse to enumerate beyond hard caps.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

MAX_ENUM_ATOMS = 24       # exact partition enumeration cap
MAX_FREE_ATOMS = 30       # MAP branch-and-bound cap
MAP_TIE_EPS = 1e-9        # score gaps below this count as ties in MAP search


class DomainMissing(Exception):
    """A predicate, domain, or constant is not declared in the model."""


class TooLarge(Exception):
    """Exact computation would exceed the documented enumeration caps."""


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_CONST = r"[A-Za-z0-9_][A-Za-z0-9_:.\-]*"
_LITERAL_RE = re.compile(rf"^(!)?\s*({_NAME})\s*\(([^()]*)\)$")


@dataclass(frozen=True)
class Predicate:
    name: str
    arg_domains: tuple[str, ...]


@dataclass(frozen=True)
class Literal:
    predicate: str
    args: tuple[str, ...]  # constants, or variables prefixed with '?'
    negated: bool = False

    def __str__(self) -> str:
        neg = "!" if self.negated else ""
        return f"{neg}{self.predicate}({','.join(self.args)})"


@dataclass
class Formula:
    """A weighted disjunction of literals."""

    literals: tuple[Literal, ...]
    weight: float = 0.0

    def clause_text(self) -> str:
        return " | ".join(str(lit) for lit in self.literals)


def parse_literal(text: str) -> Literal:
    m = _LITERAL_RE.match(text.strip())
    if not m:
        raise ValueError(f"cannot parse literal {text!r}")
    neg, name, argtext = m.groups()
    args = tuple(a.strip() for a in argtext.split(",")) if argtext.strip() else ()
    if not args or any(not a for a in args):
        raise ValueError(f"literal {text!r} needs at least one nonempty argument")
    for a in args:
        body = a[1:] if a.startswith("?") else a
        pattern = _NAME if a.startswith("?") else _CONST
        if not re.fullmatch(pattern, body):
            raise ValueError(f"bad argument token {a!r} in literal {text!r}")
    return Literal(predicate=name, args=args, negated=bool(neg))


def parse_clause(text: str) -> tuple[Literal, ...]:
    parts = [p for p in (s.strip() for s in text.split("|")) if p]
    if not parts:
        raise ValueError(f"empty clause {text!r}")
    return tuple(parse_literal(p) for p in parts)


def _atom_key(predicate: str, args) -> tuple:
    return (predicate, tuple(args))


def parse_atom(text: str) -> tuple:
    lit = parse_literal(text)
    if lit.negated:
        raise ValueError(f"atom {text!r} must not be negated")
    if any(a.startswith("?") for a in lit.args):
        raise ValueError(f"atom {text!r} must be variable-free")
    return _atom_key(lit.predicate, lit.args)


def format_atom(atom: tuple) -> str:
    name, args = atom
    return f"{name}({','.join(args)})"


class MlnModel:
    """Domains, typed predicates, weighted clauses, and query predicates."""

    def __init__(self, domains: dict, predicates: list, formulas: list,
                 query_predicates=()):
        self.domains = {name: list(values) for name, values in domains.items()}
        self.predicates = list(predicates)
        self.formulas = list(formulas)
        self.query_predicates = set(query_predicates)
        self._validate()
        self._atoms = None
        self._atom_index = None
        self._ground = None

    def _validate(self):
        for dom, values in self.domains.items():
            if not values:
                raise DomainMissing(f"domain {dom!r} is empty")
            if len(set(values)) != len(values):
                raise ValueError(f"domain {dom!r} has duplicate constants")
        pred_names = set()
        for pred in self.predicates:
            if pred.name in pred_names:
                raise ValueError(f"duplicate predicate {pred.name!r}")
            pred_names.add(pred.name)
            for dom in pred.arg_domains:
                if dom not in self.domains:
                    raise DomainMissing(f"predicate {pred.name!r} uses unknown domain {dom!r}")
        for q in self.query_predicates:
            if q not in pred_names:
                raise DomainMissing(f"query predicate {q!r} is not declared")
        self._pred_by_name = {p.name: p for p in self.predicates}
        # variables must bind to a single domain across the clause
        for f_idx, formula in enumerate(self.formulas):
            var_domains = {}
            for lit in formula.literals:
                pred = self._pred_by_name.get(lit.predicate)
                if pred is None:
                    raise DomainMissing(f"formula {f_idx}: unknown predicate {lit.predicate!r}")
                if len(lit.args) != len(pred.arg_domains):
                    raise ValueError(
                        f"formula {f_idx}: {lit.predicate!r} expects "
                        f"{len(pred.arg_domains)} args, got {len(lit.args)}"
                    )
                for arg, dom in zip(lit.args, pred.arg_domains):
                    if arg.startswith("?"):
                        bound = var_domains.setdefault(arg, dom)
                        if bound != dom:
                            raise ValueError(
                                f"formula {f_idx}: variable {arg} bound to domains "
                                f"{bound!r} and {dom!r}"
                            )
                    elif arg not in self._domain_set(dom):
                        raise DomainMissing(
                            f"formula {f_idx}: constant {arg!r} not in domain {dom!r}"
                        )

    def _domain_set(self, dom: str) -> set:
        cache = getattr(self, "_domain_sets", None)
        if cache is None:
            cache = {name: set(vals) for name, vals in self.domains.items()}
            self._domain_sets = cache
        return cache[dom]

    def predicate(self, name: str) -> Predicate:
        try:
            return self._pred_by_name[name]
        except KeyError:
            raise DomainMissing(f"unknown predicate {name!r}") from None

    def atoms(self) -> list:
        """All ground atoms, ordered by predicate declaration then domains."""
        if self._atoms is None:
            atoms = []
            for pred in self.predicates:
                pools = [self.domains[d] for d in pred.arg_domains]
                for combo in itertools.product(*pools):
                    atoms.append(_atom_key(pred.name, combo))
            self._atoms = atoms
            self._atom_index = {a: i for i, a in enumerate(atoms)}
        return self._atoms

    def atom_index(self, atom: tuple) -> int:
        self.atoms()
        try:
            return self._atom_index[atom]
        except KeyError:
            name = atom[0] if isinstance(atom, tuple) else atom
            if name not in self._pred_by_name:
                raise DomainMissing(f"unknown predicate in atom {atom!r}") from None
            raise DomainMissing(f"atom {atom!r} uses constants outside its domains") from None

    def weights(self) -> np.ndarray:
        return np.array([f.weight for f in self.formulas], dtype=float)

    def set_weights(self, weights) -> None:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (len(self.formulas),):
            raise ValueError(f"expected {len(self.formulas)} weights, got {weights.shape}")
        for formula, w in zip(self.formulas, weights):
            formula.weight = float(w)


class World:
    """A complete truth assignment over a model's ground atoms."""

    def __init__(self, model: MlnModel, assignment=None):
        self.model = model
        n = len(model.atoms())
        if assignment is None:
            self.assignment = np.zeros(n, dtype=bool)
        else:
            arr = np.asarray(assignment, dtype=bool)
            if arr.shape != (n,):
                raise ValueError(f"assignment must have {n} entries, got {arr.shape}")
            self.assignment = arr.copy()

    @classmethod
    def from_true_atoms(cls, model: MlnModel, true_atoms) -> "World":
        world = cls(model)
        for atom in true_atoms:
            if isinstance(atom, str):
                atom = parse_atom(atom)
            world.assignment[model.atom_index(atom)] = True
        return world

    def __getitem__(self, atom) -> bool:
        if isinstance(atom, str):
            atom = parse_atom(atom)
        return bool(self.assignment[self.model.atom_index(atom)])

    def true_atoms(self) -> list:
        atoms = self.model.atoms()
        return [atoms[i] for i in np.flatnonzero(self.assignment)]

    def key(self) -> bytes:
        return self.assignment.tobytes()


# --- grounding ----------------------------------------------------------------

@dataclass(frozen=True)
class GroundClause:
    formula_index: int
    literals: tuple  # (atom_index, negated) pairs, deduplicated and sorted


def ground(model: MlnModel) -> list:
    """All distinct ground clauses, grouped by formula, substitution order.

    Substitutions enumerate each clause's variables (first-appearance order)
    over their domains. Repeated literals collapse and duplicate groundings
    of the same formula are dropped.
    """
    if model._ground is not None:
        return model._ground
    model.atoms()
    out = []
    for f_idx, formula in enumerate(model.formulas):
        variables = []
        var_domain = {}
        for lit in formula.literals:
            pred = model.predicate(lit.predicate)
            for arg, dom in zip(lit.args, pred.arg_domains):
                if arg.startswith("?") and arg not in var_domain:
                    var_domain[arg] = dom
                    variables.append(arg)
        pools = [model.domains[var_domain[v]] for v in variables]
        seen = set()
        for combo in itertools.product(*pools):
            sub = dict(zip(variables, combo))
            pairs = []
            for lit in formula.literals:
                args = tuple(sub.get(a, a) for a in lit.args)
                pairs.append((model.atom_index(_atom_key(lit.predicate, args)), lit.negated))
            canon = tuple(sorted(set(pairs)))
            if canon in seen:
                continue
            seen.add(canon)
            out.append(GroundClause(f_idx, canon))
    model._ground = out
    return out


def _clause_satisfied(clause: GroundClause, assignment: np.ndarray) -> bool:
    for atom_idx, negated in clause.literals:
        if bool(assignment[atom_idx]) != negated:
            return True
    return False


def count_satisfied(model: MlnModel, world: World) -> np.ndarray:
    """Satisfied grounding count per formula."""
    counts = np.zeros(len(model.formulas), dtype=float)
    for clause in ground(model):
        if _clause_satisfied(clause, world.assignment):
            counts[clause.formula_index] += 1.0
    return counts


def world_score(model: MlnModel, world: World) -> float:
    return float(np.dot(model.weights(), count_satisfied(model, world)))


def _enumerate_scores(model: MlnModel) -> np.ndarray:
    """Score of every assignment; world index bit i is atom i's truth."""
    n = len(model.atoms())
    if n > MAX_ENUM_ATOMS:
        raise TooLarge(f"{n} ground atoms exceeds the enumeration cap {MAX_ENUM_ATOMS}")
    count = 1 << n
    indices = np.arange(count, dtype=np.uint64)
    scores = np.zeros(count, dtype=float)
    weights = model.weights()
    for clause in ground(model):
        w = weights[clause.formula_index]
        if w == 0.0:
            continue
        sat = np.zeros(count, dtype=bool)
        for atom_idx, negated in clause.literals:
            bit = ((indices >> np.uint64(atom_idx)) & np.uint64(1)).astype(bool)
            sat |= ~bit if negated else bit
        scores[sat] += w
    return scores


def _logsumexp(values: np.ndarray) -> float:
    m = float(np.max(values))
    return m + math.log(float(np.sum(np.exp(values - m))))


def log_partition(model: MlnModel) -> float:
    """Log normalizer by exact enumeration (raises TooLarge past the cap)."""
    return _logsumexp(_enumerate_scores(model))


def partition(model: MlnModel) -> float:
    return math.exp(log_partition(model))


def world_log_probability(model: MlnModel, world: World) -> float:
    return world_score(model, world) - log_partition(model)


# --- pseudo-likelihood ---------------------------------------------------------

def _log_sigmoid(x: np.ndarray) -> np.ndarray:
    return -np.logaddexp(0.0, -x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class _PllCache:
    """Flattened flip-delta rows for a dataset of worlds.

    Row r is one (unique world, atom) pair with multiplicity counts[r]; its
    sparse entries give, per formula, the satisfied-count change when that
    atom flips: delta_i = n_i(x) - n_i(x with atom flipped). Rows whose flip
    changes nothing are summarized by zero_rows (they each contribute a
    constant -log 2 to the objective and nothing to the gradient).

    ``flip_atoms`` restricts which atoms are conditioned on the rest; the
    default (None) scores every atom. Passing the atoms of the query
    predicates gives the conditional pseudo-log-likelihood used for
    discriminative training, where the other predicates are evidence.
    """

    def __init__(self, model: MlnModel, worlds, flip_atoms=None):
        clauses = ground(model)
        atom_clauses = defaultdict(list)
        for cpos, clause in enumerate(clauses):
            for atom_idx, _ in clause.literals:
                atom_clauses[atom_idx].append(cpos)

        unique = {}
        for world in worlds:
            if world.model is not model:
                # allow equal-structure models, indexing must agree
                if len(world.assignment) != len(model.atoms()):
                    raise ValueError("world does not match the model's atom table")
            key = world.key()
            if key in unique:
                unique[key][0] += 1
            else:
                unique[key] = [1, world]

        n_atoms = len(model.atoms())
        if flip_atoms is None:
            flip_list = range(n_atoms)
        else:
            flip_list = sorted({int(a) for a in flip_atoms})
            if flip_list and not (0 <= flip_list[0] and flip_list[-1] < n_atoms):
                raise ValueError("flip_atoms indices out of range")
        counts, row_entries = [], []
        zero_rows = 0.0
        for mult, world in unique.values():
            assignment = world.assignment
            base = {cpos: _clause_satisfied(clauses[cpos], assignment) for cpos in range(len(clauses))}
            for atom in flip_list:
                deltas = defaultdict(int)
                flipped = assignment.copy()
                flipped[atom] = not flipped[atom]
                for cpos in atom_clauses.get(atom, ()):
                    before = base[cpos]
                    after = _clause_satisfied(clauses[cpos], flipped)
                    if before != after:
                        deltas[clauses[cpos].formula_index] += 1 if before else -1
                entries = sorted((f, d) for f, d in deltas.items() if d != 0)
                if entries:
                    counts.append(mult)
                    row_entries.append(entries)
                else:
                    zero_rows += mult

        self.counts = np.array(counts, dtype=float)
        self.zero_rows = zero_rows
        nnz_rows, nnz_formula, nnz_delta = [], [], []
        for r, entries in enumerate(row_entries):
            for f, d in entries:
                nnz_rows.append(r)
                nnz_formula.append(f)
                nnz_delta.append(d)
        self.nnz_rows = np.array(nnz_rows, dtype=np.int64)
        self.nnz_formula = np.array(nnz_formula, dtype=np.int64)
        self.nnz_delta = np.array(nnz_delta, dtype=float)
        self.n_formulas = len(model.formulas)

    def objective_and_gradient(self, weights: np.ndarray) -> tuple[float, np.ndarray]:
        n_rows = len(self.counts)
        margins = np.zeros(n_rows)
        if len(self.nnz_rows):
            np.add.at(margins, self.nnz_rows, self.nnz_delta * weights[self.nnz_formula])
        objective = float(np.dot(self.counts, _log_sigmoid(margins)))
        objective += self.zero_rows * -math.log(2.0)
        grad = np.zeros(self.n_formulas)
        if len(self.nnz_rows):
            coef = self.counts * _sigmoid(-margins)  # count * (1 - sigma(margin))
            grad = np.bincount(
                self.nnz_formula,
                weights=self.nnz_delta * coef[self.nnz_rows],
                minlength=self.n_formulas,
            ).astype(float)
        return objective, grad


def pseudo_log_likelihood(model: MlnModel, worlds, flip_atoms=None) -> float:
    """Sum over worlds and atoms of log P(atom | rest of the world)."""
    cache = _PllCache(model, list(worlds), flip_atoms)
    value, _ = cache.objective_and_gradient(model.weights())
    return value


def pll_gradient(model: MlnModel, worlds, flip_atoms=None) -> np.ndarray:
    cache = _PllCache(model, list(worlds), flip_atoms)
    _, grad = cache.objective_and_gradient(model.weights())
    return grad


@dataclass
class LearnOptions:
    max_iters: int = 200
    learning_rate: float = 1.0
    tol: float = 1e-6            # stop when the penalized gradient is this flat
    l2_sigma: float = 10.0       # Gaussian prior stddev; None disables
    min_step: float = 1e-12


@dataclass
class LearnResult:
    weights: np.ndarray
    objective_history: list
    iterations: int
    converged: bool


def learn_weights(model: MlnModel, worlds, opts: LearnOptions | None = None,
                  flip_atoms=None) -> LearnResult:
    """Gradient ascent on the (penalized) pseudo-log-likelihood.

    The objective is concave, so plain ascent with step halving converges;
    accepted iterations never decrease the penalized objective. With
    ``flip_atoms`` the objective is the conditional pseudo-log-likelihood
    over just those atoms (discriminative training).
    """
    opts = opts if opts is not None else LearnOptions()
    if not model.formulas:
        return LearnResult(weights=np.zeros(0), objective_history=[],
                           iterations=0, converged=True)
    cache = _PllCache(model, list(worlds), flip_atoms)
    w = model.weights()

    def penalized(weights):
        obj, grad = cache.objective_and_gradient(weights)
        if opts.l2_sigma is not None:
            var = opts.l2_sigma ** 2
            obj -= float(np.dot(weights, weights)) / (2.0 * var)
            grad = grad - weights / var
        return obj, grad

    obj, grad = penalized(w)
    history = [obj]
    lr = opts.learning_rate
    converged = False
    iterations = 0
    for iterations in range(1, opts.max_iters + 1):
        if float(np.max(np.abs(grad))) < opts.tol:
            converged = True
            break
        stepped = False
        while lr >= opts.min_step:
            w_new = w + lr * grad
            obj_new, grad_new = penalized(w_new)
            if obj_new >= obj:
                w, obj, grad = w_new, obj_new, grad_new
                history.append(obj)
                lr = min(lr * 1.25, 64.0 * opts.learning_rate)
                stepped = True
                break
            lr *= 0.5
        if not stepped:
            converged = True  # step collapsed: at a numerical optimum
            break
    else:
        iterations = opts.max_iters
    return LearnResult(weights=w, objective_history=history,
                       iterations=iterations, converged=converged)


# --- MAP inference -------------------------------------------------------------

def map_infer(model: MlnModel, evidence: dict, max_free_atoms: int = MAX_FREE_ATOMS) -> World:
    """Highest-score completion of the query atoms given full evidence.

    Evidence must assign every atom of every non-query predicate; atoms of
    query predicates may be pre-assigned too. Branch and bound explores free
    atoms in atom order, false before true, and only a score more than
    MAP_TIE_EPS above the incumbent replaces it, so ties (including float
    round-off ties) resolve to the lexicographically smallest completion.
    The optimistic bound adds every positive weight whose clause is still
    undecided.
    """
    atoms = model.atoms()
    assigned = np.full(len(atoms), -1, dtype=np.int8)  # -1 free, 0 false, 1 true
    for key, value in evidence.items():
        atom = parse_atom(key) if isinstance(key, str) else _atom_key(key[0], key[1])
        assigned[model.atom_index(atom)] = 1 if value else 0

    free = []
    for i, (pred_name, _) in enumerate(atoms):
        if assigned[i] == -1:
            if pred_name not in model.query_predicates:
                raise ValueError(f"evidence must assign non-query atom {format_atom(atoms[i])}")
            free.append(i)
    if len(free) > max_free_atoms:
        raise TooLarge(f"{len(free)} free atoms exceeds the MAP cap {max_free_atoms}")

    weights = model.weights()
    clauses = ground(model)

    # clause bookkeeping against the fixed evidence
    base_score = 0.0
    unresolved = []  # (weight, [(atom_idx, negated) over free atoms])
    for clause in clauses:
        w = weights[clause.formula_index]
        satisfied = False
        free_literals = []
        for atom_idx, negated in clause.literals:
            if assigned[atom_idx] == -1:
                free_literals.append((atom_idx, negated))
            elif bool(assigned[atom_idx]) != negated:
                satisfied = True
                break
        if satisfied:
            base_score += w
        elif free_literals:
            unresolved.append((w, free_literals))
        # else: clause already false, contributes 0

    atom_entries = defaultdict(list)  # free atom -> [(clause_pos, negated)]
    for cpos, (_, lits) in enumerate(unresolved):
        for atom_idx, negated in lits:
            atom_entries[atom_idx].append((cpos, negated))

    remaining = [len(lits) for _, lits in unresolved]
    status = [0] * len(unresolved)  # 0 open, 1 satisfied, 2 dead
    optimistic = sum(w for w, _ in unresolved if w > 0.0)

    best_score = -math.inf
    best_values = None
    values = np.zeros(len(free), dtype=bool)

    def propagate(atom_idx: int, value: bool):
        """Apply one assignment; returns (score_gain, bound_loss, undo list)."""
        gain, bound_loss = 0.0, 0.0
        undo = []
        for cpos, negated in atom_entries[atom_idx]:
            if status[cpos] != 0:
                continue
            w = unresolved[cpos][0]
            if value != negated:  # literal true: clause satisfied
                status[cpos] = 1
                gain += w
                if w > 0.0:
                    bound_loss += w
                undo.append((cpos, None))
            else:
                remaining[cpos] -= 1
                if remaining[cpos] == 0:
                    status[cpos] = 2  # all literals false
                    if w > 0.0:
                        bound_loss += w
                    undo.append((cpos, "dead"))
                else:
                    undo.append((cpos, "count"))
        return gain, bound_loss, undo

    def retract(undo):
        for cpos, kind in undo:
            if kind is None:
                status[cpos] = 0
            elif kind == "dead":
                status[cpos] = 0
                remaining[cpos] += 1
            else:
                remaining[cpos] += 1

    def dfs(depth: int, score: float, bound_pool: float):
        nonlocal best_score, best_values
        if depth == len(free):
            if score > best_score + MAP_TIE_EPS:
                best_score = score
                best_values = values.copy()
            return
        if score + bound_pool <= best_score + MAP_TIE_EPS:
            return
        atom_idx = free[depth]
        for value in (False, True):
            gain, bound_loss, undo = propagate(atom_idx, value)
            values[depth] = value
            dfs(depth + 1, score + gain, bound_pool - bound_loss)
            retract(undo)

    dfs(0, base_score, optimistic)

    assignment = np.zeros(len(atoms), dtype=bool)
    assignment[assigned == 1] = True
    for depth, atom_idx in enumerate(free):
        assignment[atom_idx] = bool(best_values[depth])
    return World(model, assignment)


# --- serialization --------------------------------------------------------------

def model_to_dict(model: MlnModel) -> dict:
    return {
        "domains": {k: list(v) for k, v in model.domains.items()},
        "predicates": [
            {"name": p.name, "arg_domains": list(p.arg_domains)} for p in model.predicates
        ],
        "formulas": [
            {"clause": f.clause_text(), "weight": f.weight} for f in model.formulas
        ],
        "query_predicates": sorted(model.query_predicates),
    }


def model_from_dict(data: dict) -> MlnModel:
    predicates = [Predicate(p["name"], tuple(p["arg_domains"])) for p in data["predicates"]]
    formulas = [
        Formula(parse_clause(f["clause"]), float(f.get("weight", 0.0)))
        for f in data["formulas"]
    ]
    return MlnModel(
        domains=data["domains"],
        predicates=predicates,
        formulas=formulas,
        query_predicates=data.get("query_predicates", ()),
    )


def save_model(model: MlnModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> MlnModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def format_world(world: World) -> str:
    return " ".join(format_atom(a) for a in world.true_atoms())


def load_worlds(path, model: MlnModel) -> list:
    """One world per line: whitespace-separated true atoms, closed world."""
    worlds = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            worlds.append(World.from_true_atoms(model, line.split()))
    return worlds


def save_worlds(worlds, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for world in worlds:
            fh.write(format_world(world) + "\n")
