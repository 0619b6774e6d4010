"""Variable-length transmission with per-epoch confirm/deny verification.

Each epoch spends n channel uses: a length-ceil(gamma n) data phase carrying
one of message_count messages through a random state-feedback codebook, then
a verification phase in which the transmitter, knowing whether the receiver
decoded correctly, plays one of two deterministic state maps (f0 = confirm,
f1 = deny).  The receiver thresholds the log-likelihood ratio of the observed
(state, output) transitions; a deny repeats the epoch with the channel state
carried over.  Decoding errors require a deny to slip past the verifier, so
the error exponent is governed by the divergence coefficient D rather than
the sphere-packing bound.

All randomness is drawn from per-trial Philox substreams (seed, trial):
trial t consumes 2 uniforms up front (message, initial state) and exactly n
uniforms per epoch, so results are independent of batching and worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .channel import ChannelError
from .planner import BurnashevResult, CapacityResult, burnashev_coefficient, capacity

MESSAGE_CAP = 1 << 16
_E_ENTRY_BUDGET = 64_000_000      # max float64 entries for the eager decode matrix
_CODEBOOK_CHUNK = 4096            # codewords drawn per block (fixed: determinism)


def _message_count(n: int, rate: float) -> int:
    # Guard against float slop: 40*0.175 = 6.999999... must still floor to 7.
    k = math.floor(n * rate + 1e-9)
    if k >= 12:                    # e^12 already exceeds the 2^16 cap
        return MESSAGE_CAP
    return min(MESSAGE_CAP, max(2, round(math.exp(k))))


@dataclass(frozen=True)
class SchemeConfig:
    """Operating point of the scheme; derived block lengths are computed."""

    rate: float                    # nats per channel use
    gamma: float                   # data-phase fraction of each epoch
    n: int                         # channel uses per epoch
    trials: int = 1000
    seed: int = 0
    confirm_threshold: float | None = None   # accept iff LLR/n_tilde >= this; None -> -D/4
    max_epochs: int = 64
    message_count: int = field(init=False)
    n_hat: int = field(init=False)
    n_tilde: int = field(init=False)

    def __post_init__(self):
        if not self.rate > 0.0:
            raise ChannelError("rate must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ChannelError("gamma must lie in (0, 1)")
        if self.trials < 1 or self.max_epochs < 1:
            raise ChannelError("trials and max_epochs must be positive")
        # ceil with slop guard: 0.6*20 can evaluate to 12.000000000000002.
        n_hat = math.ceil(self.gamma * self.n - 1e-9)
        n_tilde = self.n - n_hat
        if n_hat < 1 or n_tilde < 2:
            raise ChannelError("epoch too short: need data phase >= 1 and verify phase >= 2")
        object.__setattr__(self, "message_count", _message_count(self.n, self.rate))
        object.__setattr__(self, "n_hat", n_hat)
        object.__setattr__(self, "n_tilde", n_tilde)


@dataclass(frozen=True)
class EpochTrace:
    epoch: int
    decoded: int
    phase1_correct: bool
    sent_bit: int                  # 0 = confirm, 1 = deny
    decided_bit: int
    llr: float                     # may be +-inf


class Scheme:
    """Bound channel + config + planner results + sampling tables."""

    def __init__(self, ch, config, cap_result, exp_result, threshold):
        self.ch = ch
        self.config = config
        self.capacity_result = cap_result
        self.exponent_result = exp_result
        self.confirm_threshold = threshold          # None only when D = +inf
        S, X, Y = ch.n_states, ch.n_inputs, ch.n_outputs
        self._S, self._X, self._Y = S, X, Y
        k = ch.kernel
        flat = k.reshape(S, X, S * Y)
        self._pair_cdf = np.cumsum(flat, axis=2)
        pos = flat > 0.0
        self._last_pos = np.where(pos.any(axis=2),
                                  (S * Y - 1) - np.argmax(pos[:, :, ::-1], axis=2), 0)
        self._init_cdf = np.cumsum(ch.initial_dist)
        self._init_last = int(np.nonzero(ch.initial_dist > 0.0)[0][-1])
        self._logk = np.where(pos, np.log(np.maximum(flat, 1e-300)), -1e18)  # (S, X, SY)
        f0, f1 = np.array(exp_result.f0), np.array(exp_result.f1)
        self._f0, self._f1 = f0, f1
        p0 = k[np.arange(S), f0].reshape(S, S, Y)   # P(v, y | s, f0(s))
        p1 = k[np.arange(S), f1].reshape(S, S, Y)
        llr = np.zeros((S, S, Y))
        both = (p0 > 0.0) & (p1 > 0.0)
        llr[both] = np.log(p0[both]) - np.log(p1[both])
        llr[(p0 > 0.0) & (p1 == 0.0)] = math.inf
        llr[(p0 == 0.0) & (p1 > 0.0)] = -math.inf
        self._llr_tab = llr
        self._forbid = p1 == 0.0                    # deny-impossible transitions
        self.infinite_d = exp_result.D.is_inf
        self._codebook = None
        self._indicator = None

    # -- lazy codebook ------------------------------------------------------

    @property
    def codebook(self) -> np.ndarray:
        """(message_count, n_hat, S) int8 array of inputs, drawn i.i.d. from pi*."""
        if self._codebook is None:
            cfg = self.config
            w_total, n_hat, S = cfg.message_count, cfg.n_hat, self._S
            pol_cdf = np.cumsum(self.capacity_result.optimal_policy.matrix(), axis=1)
            last = np.array([
                int(np.nonzero(self.capacity_result.optimal_policy.matrix()[s] > 0.0)[0][-1])
                for s in range(S)
            ])
            gen = _rng.stream(cfg.seed, _rng.CODEBOOK_STREAM)
            blocks = []
            for lo in range(0, w_total, _CODEBOOK_CHUNK):
                hi = min(lo + _CODEBOOK_CHUNK, w_total)
                u = gen.random((hi - lo, n_hat, S))
                idx = np.empty((hi - lo, n_hat, S), dtype=np.int8)
                for s in range(S):
                    cnt = (pol_cdf[s][None, None, :] <= u[:, :, s, None]).sum(axis=2)
                    idx[:, :, s] = np.minimum(cnt, last[s])
                blocks.append(idx)
            self._codebook = np.concatenate(blocks, axis=0)
        return self._codebook

    def _ensure_indicator(self):
        """One-hot (W, n_hat*S*X) float64 used by the dot-product ML decoder."""
        if self._indicator is not None:
            return self._indicator
        cfg = self.config
        entries = cfg.message_count * cfg.n_hat * self._S * self._X
        if entries > _E_ENTRY_BUDGET:
            return None                              # decode falls back to chunks
        cb = self.codebook
        w_total, n_hat, S, X = cfg.message_count, cfg.n_hat, self._S, self._X
        e = np.zeros((w_total, n_hat, S, X))
        wi = np.arange(w_total)[:, None, None]
        ti = np.arange(n_hat)[None, :, None]
        si = np.arange(S)[None, None, :]
        e[wi, ti, si, cb] = 1.0
        self._indicator = e.reshape(w_total, -1)
        return self._indicator


def build_scheme(ch, config: SchemeConfig, cap_result: CapacityResult | None = None,
                 exp_result: BurnashevResult | None = None) -> Scheme:
    """Assemble a runnable scheme; planner results are computed if not given."""
    if cap_result is None:
        cap_result = capacity(ch)
    if exp_result is None:
        exp_result = burnashev_coefficient(ch)
    c_val = cap_result.C
    if not c_val > 0.0:
        raise ChannelError("channel capacity is zero; no positive rate is supported")
    if not config.rate < c_val:
        raise ChannelError(f"rate {config.rate} is not below capacity {c_val}")
    if not config.rate / c_val < config.gamma < 1.0:
        raise ChannelError(
            f"gamma {config.gamma} outside ({config.rate / c_val:.6g}, 1)")
    if exp_result.D.is_inf:
        threshold = config.confirm_threshold         # unused by the zero-error rule
    elif config.confirm_threshold is not None:
        threshold = float(config.confirm_threshold)
    else:
        threshold = -exp_result.D.value / 4.0
    return Scheme(ch, config, cap_result, exp_result, threshold)


# ---------------------------------------------------------------------------
# vectorized batch engine

def _sample_pairs(scheme, s, x, u):
    """Draw (next_state, output) for each trial from kernel rows (s, x)."""
    rows = scheme._pair_cdf[s, x]                    # (B, S*Y)
    cnt = (rows <= u[:, None]).sum(axis=1)
    flat = np.minimum(cnt, scheme._last_pos[s, x])   # zero-mass cells stay unreachable
    return flat // scheme._Y, flat % scheme._Y


def _phase1_batch(scheme, w, s0, u):
    """Data phase for a batch: returns (decoded, end_state, state_paths)."""
    cfg = scheme.config
    b, n_hat = u.shape[0], cfg.n_hat
    cb = scheme.codebook
    ss = np.empty((b, n_hat), dtype=np.int64)
    vv = np.empty((b, n_hat), dtype=np.int64)
    yy = np.empty((b, n_hat), dtype=np.int64)
    s = s0.astype(np.int64)
    for t in range(n_hat):
        x = cb[w, t, s].astype(np.int64)
        v, y = _sample_pairs(scheme, s, x, u[:, t])
        ss[:, t], vv[:, t], yy[:, t] = s, v, y
        s = v
    flat_obs = vv * scheme._Y + yy
    # per-use scores at the visited state; other states stay 0 so that the
    # dot product with the codebook indicator reads off the codeword score
    scores_u = np.zeros((b, n_hat, scheme._S, scheme._X))
    bi = np.arange(b)[:, None]
    ti = np.arange(n_hat)[None, :]
    scores_u[bi, ti, ss, :] = scheme._logk[ss, :, flat_obs]
    u_flat = scores_u.reshape(b, -1)
    e = scheme._ensure_indicator()
    if e is not None:
        decoded = np.argmax(u_flat @ e.T, axis=1)
    else:
        decoded = _chunked_decode(scheme, u_flat)
    return decoded, s, ss


def _chunked_decode(scheme, u_flat):
    """ML decode against codeword blocks when the full matrix is too large."""
    cfg = scheme.config
    n_hat, S, X = cfg.n_hat, scheme._S, scheme._X
    cb = scheme.codebook
    b = u_flat.shape[0]
    best = np.full(b, -math.inf)
    arg = np.zeros(b, dtype=np.int64)
    chunk = max(1, _E_ENTRY_BUDGET // (4 * n_hat * S * X))
    ti = np.arange(n_hat)[None, :, None]
    si = np.arange(S)[None, None, :]
    for lo in range(0, cfg.message_count, chunk):
        hi = min(lo + chunk, cfg.message_count)
        e = np.zeros((hi - lo, n_hat, S, X))
        wi = np.arange(hi - lo)[:, None, None]
        e[wi, ti, si, cb[lo:hi]] = 1.0
        sc = u_flat @ e.reshape(hi - lo, -1).T
        loc = np.argmax(sc, axis=1)
        val = sc[np.arange(b), loc]
        better = val > best                          # strict: keeps lowest index on ties
        best[better] = val[better]
        arg[better] = loc[better] + lo
    return arg


def _phase2_batch(scheme, bits, s0, u):
    """Verification phase: returns (decided, end_state, llr, forbidden_seen)."""
    cfg = scheme.config
    n_tilde = cfg.n_tilde
    s = s0.astype(np.int64)
    llr = np.zeros(u.shape[0])
    fired = np.zeros(u.shape[0], dtype=bool)
    f0s, f1s = scheme._f0, scheme._f1
    for t in range(n_tilde):
        x = np.where(bits == 0, f0s[s], f1s[s]).astype(np.int64)
        v, y = _sample_pairs(scheme, s, x, u[:, t])
        if t < n_tilde - 1:                          # the last next-state is unobserved
            llr = llr + scheme._llr_tab[s, v, y]
            fired |= scheme._forbid[s, v, y]
        s = v
    if scheme.infinite_d:
        decided = np.where(fired, 0, 1)
    else:
        decided = np.where(llr / n_tilde >= scheme.confirm_threshold, 0, 1)
    return decided, s, llr, fired


def _draw_initial(scheme, u):
    cnt = (scheme._init_cdf[None, :] <= u[:, None]).sum(axis=1)
    return np.minimum(cnt, scheme._init_last)


# ---------------------------------------------------------------------------
# single-trial entry points

def run_phase1(scheme, w: int, gen, start_state: int | None = None):
    """One data phase; returns (decoded message, visited states).

    Draws one uniform for the initial state when start_state is None, then
    n_hat channel uses from gen.
    """
    if not 0 <= w < scheme.config.message_count:
        raise ChannelError("message index out of range")
    if start_state is None:
        s0 = _draw_initial(scheme, gen.random(1))
    else:
        s0 = np.array([int(start_state)])
    u = gen.random((1, scheme.config.n_hat))
    decoded, s_end, ss = _phase1_batch(scheme, np.array([w]), s0, u)
    states = [int(v) for v in ss[0]] + [int(s_end[0])]
    return int(decoded[0]), states


def run_phase2(scheme, bit: int, gen, start_state: int | None = None):
    """One verification phase; returns (decided bit, llr, visited states)."""
    if bit not in (0, 1):
        raise ChannelError("bit must be 0 or 1")
    if start_state is None:
        s0 = _draw_initial(scheme, gen.random(1))
    else:
        s0 = np.array([int(start_state)])
    u = gen.random((1, scheme.config.n_tilde))
    decided, s_end, llr, _ = _phase2_batch(scheme, np.array([bit]), s0, u)
    return int(decided[0]), float(llr[0]), int(s_end[0])


def run_trial(scheme, w: int, gen, start_state: int | None = None):
    """Epochs until a confirm is accepted; returns (traces, decoded, aborted).

    Uses one uniform for the initial state (unless given) and n per epoch.
    The channel state carries over between phases and epochs.
    """
    cfg = scheme.config
    if start_state is None:
        s = _draw_initial(scheme, gen.random(1))
    else:
        s = np.array([int(start_state)])
    traces = []
    w_arr = np.array([w])
    for epoch in range(cfg.max_epochs):
        u = gen.random((1, cfg.n))
        decoded, s, _ = _phase1_batch(scheme, w_arr, s, u[:, :cfg.n_hat])
        sent = int(decoded[0] != w)
        decided, s, llr, _ = _phase2_batch(scheme, np.array([sent]), s, u[:, cfg.n_hat:])
        traces.append(EpochTrace(epoch, int(decoded[0]), sent == 0, sent,
                                 int(decided[0]), float(llr[0])))
        if int(decided[0]) == 0:
            return traces, int(decoded[0]), False
    return traces, int(decoded[0]), True


# ---------------------------------------------------------------------------
# Monte-Carlo driver

def _wilson_ci(k: int, n: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(frozen=True)
class SimReport:
    trials: int
    mean_epochs: float
    mean_T: float
    empirical_rate: float
    error_count: int
    p_e_hat: float
    p_e_ci: tuple
    phase1_error_rate: float | None
    phase2_type0_rate: float | None        # P(decide deny | confirm sent)
    phase2_type1_rate: float | None        # P(decide confirm | deny sent)
    mean_llr_per_symbol_h0: float | None
    mean_llr_per_symbol_h1: float | None
    aborted_trials: int
    bound_checks: dict

    def to_json_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_epochs": self.mean_epochs,
            "mean_T": self.mean_T,
            "empirical_rate": self.empirical_rate,
            "error_count": self.error_count,
            "p_e_hat": self.p_e_hat,
            "p_e_ci": list(self.p_e_ci),
            "phase1_error_rate": self.phase1_error_rate,
            "phase2_type0_rate": self.phase2_type0_rate,
            "phase2_type1_rate": self.phase2_type1_rate,
            "mean_llr_per_symbol_h0": self.mean_llr_per_symbol_h0,
            "mean_llr_per_symbol_h1": self.mean_llr_per_symbol_h1,
            "aborted_trials": self.aborted_trials,
            "bound_checks": self.bound_checks,
        }


def _simulate_block(scheme, trial_ids):
    """Run one contiguous block of trials; return per-trial arrays and traces.

    Each trial i consumes only stream(seed, i), so any partition of the trial
    range into blocks produces identical per-trial outcomes.
    """
    cfg = scheme.config
    b = len(trial_ids)
    w_total = cfg.message_count
    gens = [_rng.stream(cfg.seed, int(k)) for k in trial_ids]
    first = np.stack([g.random(2) for g in gens])
    w = np.minimum((first[:, 0] * w_total).astype(np.int64), w_total - 1)
    s = _draw_initial(scheme, first[:, 1])
    active = np.ones(b, dtype=bool)
    epochs_used = np.zeros(b, dtype=np.int64)
    final_decoded = np.full(b, -1, dtype=np.int64)
    traces = []
    for epoch in range(cfg.max_epochs):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        u = np.stack([gens[i].random(cfg.n) for i in idx])
        decoded, s_mid, _ = _phase1_batch(scheme, w[idx], s[idx], u[:, :cfg.n_hat])
        sent = (decoded != w[idx]).astype(np.int64)
        decided, s_end, llr, _ = _phase2_batch(scheme, sent, s_mid, u[:, cfg.n_hat:])
        for j, i in enumerate(idx):
            traces.append((int(trial_ids[i]),
                           EpochTrace(epoch, int(decoded[j]), bool(sent[j] == 0),
                                      int(sent[j]), int(decided[j]), float(llr[j]))))
        committed = decided == 0
        commit_ids = idx[committed]
        final_decoded[commit_ids] = decoded[committed]
        epochs_used[commit_ids] = epoch + 1
        active[commit_ids] = False
        s[idx] = s_end
    aborted = active.copy()
    epochs_used[aborted] = cfg.max_epochs
    return w, final_decoded, epochs_used, aborted, traces


def simulate(scheme, trace_sink=None, jobs=1) -> SimReport:
    """Run config.trials independent transmissions of uniform random messages.

    trace_sink, if given, receives (trial_index, EpochTrace) for every epoch,
    ordered by (trial, epoch).  Results are identical for every jobs value:
    trials use per-trial random substreams and are reduced in canonical order.
    """
    cfg = scheme.config
    b = cfg.trials
    jobs = max(1, int(jobs))
    bounds = [(b * j) // jobs for j in range(jobs + 1)]
    blocks = [np.arange(lo, hi) for lo, hi in zip(bounds, bounds[1:]) if hi > lo]
    if len(blocks) <= 1:
        parts = [_simulate_block(scheme, ids) for ids in blocks]
    else:
        with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
            parts = list(pool.map(lambda ids: _simulate_block(scheme, ids), blocks))
    w = np.concatenate([p[0] for p in parts])
    final_decoded = np.concatenate([p[1] for p in parts])
    epochs_used = np.concatenate([p[2] for p in parts])
    aborted = np.concatenate([p[3] for p in parts])
    traces = sorted((t for p in parts for t in p[4]),
                    key=lambda item: (item[0], item[1].epoch))
    if trace_sink is not None:
        for trial, trace in traces:
            trace_sink(trial, trace)
    ph1_decodes = len(traces)
    ph1_errors = sum(t.sent_bit for _, t in traces)
    ack_sends = ph1_decodes - ph1_errors
    ack_denied = sum(1 for _, t in traces if t.sent_bit == 0 and t.decided_bit == 1)
    deny_sends = ph1_errors
    deny_acked = sum(1 for _, t in traces if t.sent_bit == 1 and t.decided_bit == 0)
    denom = cfg.n_tilde - 1
    llr_h0 = [t.llr / denom for _, t in traces if t.sent_bit == 0]
    llr_h1 = [t.llr / denom for _, t in traces if t.sent_bit == 1]
    errors = int(((final_decoded != w) | aborted).sum())
    mean_epochs = float(epochs_used.mean())
    mean_t = cfg.n * mean_epochs
    ln_w = math.log(cfg.message_count)
    report = SimReport(
        trials=b,
        mean_epochs=mean_epochs,
        mean_T=mean_t,
        empirical_rate=ln_w / mean_t,
        error_count=errors,
        p_e_hat=errors / b,
        p_e_ci=_wilson_ci(errors, b),
        phase1_error_rate=(ph1_errors / ph1_decodes) if ph1_decodes else None,
        phase2_type0_rate=(ack_denied / ack_sends) if ack_sends else None,
        phase2_type1_rate=(deny_acked / deny_sends) if deny_sends else None,
        mean_llr_per_symbol_h0=float(np.mean(llr_h0)) if llr_h0 else None,
        mean_llr_per_symbol_h1=float(np.mean(llr_h1)) if llr_h1 else None,
        aborted_trials=int(aborted.sum()),
        bound_checks=_bound_checks(b, errors, epochs_used, ph1_decodes, ph1_errors,
                                   ack_sends, ack_denied, deny_sends, deny_acked),
    )
    return report


def _bound_checks(trials, errors, epochs_used, ph1_decodes, ph1_errors,
                  ack_sends, ack_denied, deny_sends, deny_acked) -> dict:
    """Empirical sanity bounds: error probability and epoch-count tail."""

    def se(p, n):
        return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else 0.0

    p_hat = ph1_errors / ph1_decodes if ph1_decodes else None
    p0_hat = ack_denied / ack_sends if ack_sends else None
    p1_hat = deny_acked / deny_sends if deny_sends else None
    out = {}
    applicable = all(v is not None and v > 0.0 for v in (p_hat, p0_hat, p1_hat))
    if applicable:
        denom = 1.0 - p_hat * p0_hat
        rhs = p_hat * p1_hat / denom
        dr_dp = p1_hat / (denom * denom)
        dr_dp1 = p_hat / denom
        dr_dp0 = p_hat * p_hat * p1_hat / (denom * denom)
        se_rhs = math.sqrt((dr_dp * se(p_hat, ph1_decodes)) ** 2
                           + (dr_dp1 * se(p1_hat, deny_sends)) ** 2
                           + (dr_dp0 * se(p0_hat, ack_sends)) ** 2)
        lhs = errors / trials
        slack = 3.0 * (se(lhs, trials) + se_rhs)
        out["pebound"] = {
            "applicable": True,
            "lhs": lhs,
            "rhs": rhs,
            "slack": slack,
            "pass": bool(lhs <= rhs + slack),
        }
    else:
        out["pebound"] = {"applicable": False, "pass": True}
    geo = []
    if p_hat is not None and p0_hat is not None:
        repeat = p_hat + p0_hat                      # union bound on a repeat event
        for k in (2, 3, 4):
            lhs = float((epochs_used >= k).mean())
            rhs = repeat ** (k - 1)
            se_lhs = se(lhs, trials)
            se_rep = math.sqrt(se(p_hat, ph1_decodes) ** 2 + se(p0_hat, ack_sends) ** 2)
            se_rhs = (k - 1) * repeat ** (k - 2) * se_rep if k >= 2 else 0.0
            geo.append({
                "k": k,
                "applicable": True,
                "lhs": lhs,
                "rhs": rhs,
                "slack": 3.0 * (se_lhs + se_rhs),
                "pass": bool(lhs <= rhs + 3.0 * (se_lhs + se_rhs)),
            })
    else:
        geo.append({"applicable": False, "pass": True})
    out["geometric_domination"] = geo
    return out
