use crate::elliptic::{solve_pressure, split_sources, CoefficientField, PressureOptions};
use crate::error::{Error, Result};
use crate::spectral::ops::{advective_derivative, gradient_part, laplacian, leray_project};
use crate::spectral::{product, vector_lp_norm, ProductRule, SpectralField};
use crate::transport::transport_step;

use super::config::{Coupling, SolverConfig};
use super::state::{heat, stokes_propagate, SolverState};

/// Time-independent forcing with its Leray and gradient parts.
#[derive(Clone, Debug)]
pub(crate) struct Forcing {
    pub pf: Vec<SpectralField>,
    pub qf: Vec<SpectralField>,
}

impl Forcing {
    pub fn new(f: &[SpectralField]) -> Result<Self> {
        Ok(Self { pf: leray_project(f)?, qf: gradient_part(f)? })
    }
}

/// Right-hand sides at one stage.
#[derive(Clone, Debug)]
pub(crate) struct StageEval {
    /// `−u·∇a`.
    pub a_dot: SpectralField,
    /// `μaΔũ + H − (1+a)∇Π̃`.
    pub n_tilde: Vec<SpectralField>,
    pub grad_pi_tilde: Vec<SpectralField>,
    /// `H = a(μΔu_L − ∇Π_L) − u·∇u`.
    pub h: Vec<SpectralField>,
    pub pressure_iterations: usize,
    pub pressure_residual: f64,
    pub pressure_contraction: f64,
}

fn lin(terms: &[(f64, &[SpectralField])]) -> Result<Vec<SpectralField>> {
    let mut out: Vec<SpectralField> = terms[0].1.iter().map(|c| c.scale(terms[0].0)).collect();
    for (c, v) in &terms[1..] {
        for (o, x) in out.iter_mut().zip(v.iter()) {
            o.axpy(*c, x)?;
        }
    }
    Ok(out)
}

pub(crate) struct Stepper<'a> {
    pub cfg: &'a SolverConfig,
    pub forcing: &'a Forcing,
    pub rule: ProductRule,
    pub popts: PressureOptions,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SolverConfig, forcing: &'a Forcing) -> Self {
        Self { cfg, forcing, rule: cfg.rule(), popts: cfg.pressure_options() }
    }

    pub fn eval(&self, a: &SpectralField, u_l: &[SpectralField], u_t: &[SpectralField]) -> Result<StageEval> {
        let mu = self.cfg.mu;
        let rule = self.rule;
        let u: Vec<SpectralField> = u_l.iter().zip(u_t).map(|(x, y)| x.add(y)).collect::<Result<_>>()?;
        let a_dot = advective_derivative(&u, a, rule)?.scale(-1.0);
        let mut h = Vec::with_capacity(u.len());
        let mut visc = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let mut lin_l = laplacian(&u_l[i]).scale(mu);
            lin_l.axpy(-1.0, &self.forcing.qf[i])?;
            let mut hi = product(a, &lin_l, rule)?;
            hi.axpy(-1.0, &advective_derivative(&u, &u[i], rule)?)?;
            h.push(hi);
            visc.push(product(a, &laplacian(&u_t[i]), rule)?.scale(mu));
        }
        let coef = CoefficientField::from_spectral(a)?;
        let (grad, iterations, residual, contraction) = if self.cfg.split_pressure {
            let (p1, p2) = split_sources(&coef, &visc, &h, &self.popts)?;
            let g = super::state::sum(&p1.grad, &p2.grad)?;
            (g, p1.iterations + p2.iterations, p1.residual.max(p2.residual), p1.contraction().max(p2.contraction()))
        } else {
            let f = super::state::sum(&visc, &h)?;
            let sol = solve_pressure(&coef, &f, &self.popts)?;
            let c = sol.contraction();
            (sol.grad, sol.iterations, sol.residual, c)
        };
        let mut n_tilde = Vec::with_capacity(u.len());
        for i in 0..u.len() {
            let mut n = visc[i].add(&h[i])?;
            n.axpy(-1.0, &grad[i])?;
            n.axpy(-1.0, &product(a, &grad[i], rule)?)?;
            n_tilde.push(n);
        }
        Ok(StageEval {
            a_dot,
            n_tilde,
            grad_pi_tilde: grad,
            h,
            pressure_iterations: iterations,
            pressure_residual: residual,
            pressure_contraction: contraction,
        })
    }

    /// `max|u|·dt/h`.
    pub fn cfl_number(&self, u: &[SpectralField], dt: f64) -> Result<f64> {
        let phys: Vec<_> = u.iter().map(SpectralField::inverse).collect();
        Ok(vector_lp_norm(&phys, f64::INFINITY)? * dt / u[0].grid().min_spacing())
    }

    /// Integrating-factor Heun RK3 for `ũ` (and `a` when `evolve_a`), with the
    /// Stokes part advanced exactly. `k1` must be the evaluation at `state`.
    fn momentum(&self, state: &SolverState, k1: &StageEval, dt: f64, evolve_a: bool) -> Result<SolverState> {
        let mu = self.cfg.mu;
        let pf = &self.forcing.pf;
        let h = dt;
        let third = h / 3.0;
        let a_at = |c: f64, k: &StageEval| -> Result<SpectralField> {
            let mut a = state.a.clone();
            if evolve_a {
                a.axpy(c, &k.a_dot)?;
            }
            Ok(a)
        };
        let ul1 = stokes_propagate(&state.u_l, pf, mu, third)?;
        let ul2 = stokes_propagate(&state.u_l, pf, mu, 2.0 * third)?;
        let ul3 = stokes_propagate(&state.u_l, pf, mu, h)?;

        let a2 = a_at(third, k1)?;
        let ut2 = leray_project(&heat(&lin(&[(1.0, &state.u_tilde), (third, &k1.n_tilde)])?, mu, third))?;
        let k2 = self.eval(&a2, &ul1, &ut2)?;

        let a3 = a_at(2.0 * third, &k2)?;
        let ut3 = leray_project(&lin(&[
            (1.0, &heat(&state.u_tilde, mu, 2.0 * third)),
            (2.0 * third, &heat(&k2.n_tilde, mu, third)),
        ])?)?;
        let k3 = self.eval(&a3, &ul2, &ut3)?;

        let mut a = state.a.clone();
        if evolve_a {
            a.axpy(0.25 * h, &k1.a_dot)?;
            a.axpy(0.75 * h, &k3.a_dot)?;
        }
        let u_tilde = leray_project(&lin(&[
            (1.0, &heat(&state.u_tilde, mu, h)),
            (0.25 * h, &heat(&k1.n_tilde, mu, h)),
            (0.75 * h, &heat(&k3.n_tilde, mu, third)),
        ])?)?;
        Ok(SolverState {
            t: state.t + h,
            a,
            u_l: ul3,
            u_tilde,
            grad_pi_l: self.forcing.qf.clone(),
            grad_pi_tilde: k3.grad_pi_tilde,
        })
    }

    /// One step of size `dt` under the configured coupling. `k1`, when given,
    /// is the evaluation at `state` (reused by the coupled scheme).
    pub fn step(&self, state: &SolverState, k1: Option<StageEval>, dt: f64) -> Result<SolverState> {
        match self.cfg.coupling {
            Coupling::Coupled => {
                let k1 = match k1 {
                    Some(k) => k,
                    None => self.eval(&state.a, &state.u_l, &state.u_tilde)?,
                };
                self.momentum(state, &k1, dt, true)
            }
            Coupling::Lie => {
                let u = state.u()?;
                let moved = SolverState { a: transport_step(&state.a, &u, dt)?, ..state.clone() };
                let k1 = self.eval(&moved.a, &moved.u_l, &moved.u_tilde)?;
                self.momentum(&moved, &k1, dt, false)
            }
            Coupling::Strang => {
                let u = state.u()?;
                let half = SolverState { a: transport_step(&state.a, &u, 0.5 * dt)?, ..state.clone() };
                let k1 = self.eval(&half.a, &half.u_l, &half.u_tilde)?;
                let mut next = self.momentum(&half, &k1, dt, false)?;
                next.a = transport_step(&next.a, &next.u()?, 0.5 * dt)?;
                Ok(next)
            }
        }
    }
}

/// One step of the perturbation system coupled with the density transport,
/// of size `config.dt`: `ũ` and `a` by integrating-factor RK3, `u_L` exactly,
/// `∇Π̃` from the variable-coefficient pressure solve.
pub fn perturbation_step(state: &SolverState, f: &[SpectralField], config: &SolverConfig) -> Result<SolverState> {
    let forcing = Forcing::new(f)?;
    let stepper = Stepper::new(config, &forcing);
    let number = stepper.cfl_number(&state.u()?, config.dt)?;
    if number > config.cfl_limit {
        return Err(Error::Cfl { number, limit: config.cfl_limit });
    }
    stepper.step(state, None, config.dt)
}
