//! Fixed-step classical RK4 propagators used as both the coarse and the fine solver.

use serde::Serialize;

use crate::error::{PintError, Result};
use crate::mesh::TimeMesh;
use crate::ode::{OdeSystem, StateVector};

/// Relative tolerance for "the interval is a whole number of steps".
const STEP_COUNT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Coarse,
    Fine,
}

/// Stage buffers reused across steps so the inner loop does not allocate.
struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step(&mut self, system: &OdeSystem, u: &mut [f64], t: f64, h: f64) -> Result<()> {
        let half = 0.5 * h;
        system.eval_into(u, t, &mut self.k1);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k1) {
            *x = u + half * k;
        }
        system.eval_into(&self.tmp, t + half, &mut self.k2);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k2) {
            *x = u + half * k;
        }
        system.eval_into(&self.tmp, t + half, &mut self.k3);
        for ((x, u), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k3) {
            *x = u + h * k;
        }
        system.eval_into(&self.tmp, t + h, &mut self.k4);

        let sixth = h / 6.0;
        let mut finite = true;
        for (i, x) in u.iter_mut().enumerate() {
            *x += sixth * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            finite &= x.is_finite();
        }
        if finite {
            Ok(())
        } else {
            Err(PintError::BlowUp { time: t + h })
        }
    }
}

/// One classical RK4 step of size `h` from `(u, t)`.
pub fn rk4_step(system: &OdeSystem, u: &StateVector, t: f64, h: f64) -> Result<StateVector> {
    let mut ws = Workspace::new(system.dimension());
    let mut next = u.clone();
    ws.step(system, next.as_mut_slice(), t, h)?;
    Ok(next)
}

/// Times and states recorded at every step of a propagation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&StateVector> {
        self.states.last()
    }

    /// Appends `other`, dropping its first point when it repeats our last time.
    pub fn extend_joined(&mut self, other: Trajectory) {
        let skip = usize::from(!self.times.is_empty() && other.times.first() == self.times.last());
        self.times.extend(other.times.into_iter().skip(skip));
        self.states.extend(other.states.into_iter().skip(skip));
    }
}

/// An RK4 integrator with a fixed nominal step.
#[derive(Debug, Clone)]
pub struct Propagator {
    system: OdeSystem,
    step_size: f64,
    role: Role,
}

impl Propagator {
    pub fn new(system: OdeSystem, step_size: f64, role: Role) -> Result<Self> {
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(PintError::InvalidMesh(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        Ok(Self {
            system,
            step_size,
            role,
        })
    }

    /// The coarse solver 𝒢 with step `δT`.
    pub fn coarse(system: &OdeSystem, mesh: &TimeMesh) -> Self {
        Self {
            system: system.clone(),
            step_size: mesh.coarse_step(),
            role: Role::Coarse,
        }
    }

    /// The fine solver ℱ with step `δt`.
    pub fn fine(system: &OdeSystem, mesh: &TimeMesh) -> Self {
        Self {
            system: system.clone(),
            step_size: mesh.fine_step(),
            role: Role::Fine,
        }
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn system(&self) -> &OdeSystem {
        &self.system
    }

    fn step_count(&self, t_start: f64, t_end: f64) -> Result<usize> {
        let span = t_end - t_start;
        if span < 0.0 {
            return Err(PintError::InvalidMesh(format!(
                "cannot propagate backwards from {t_start} to {t_end}"
            )));
        }
        let steps = (span / self.step_size).round();
        let scale = span.abs().max(self.step_size);
        if (steps * self.step_size - span).abs() > STEP_COUNT_TOLERANCE * scale {
            return Err(PintError::InvalidMesh(format!(
                "interval [{t_start}, {t_end}] is not a whole number of steps of {}",
                self.step_size
            )));
        }
        Ok(steps as usize)
    }

    /// Integrates from `t_start` to `t_end`, returning the final state only.
    pub fn propagate(&self, u0: &StateVector, t_start: f64, t_end: f64) -> Result<StateVector> {
        let steps = self.step_count(t_start, t_end)?;
        let mut u = u0.clone();
        if steps == 0 {
            return Ok(u);
        }
        let h = (t_end - t_start) / steps as f64;
        let mut ws = Workspace::new(self.system.dimension());
        for j in 0..steps {
            ws.step(&self.system, u.as_mut_slice(), t_start + j as f64 * h, h)?;
        }
        Ok(u)
    }

    /// As [`Propagator::propagate`] but records every step.
    pub fn propagate_trajectory(
        &self,
        u0: &StateVector,
        t_start: f64,
        t_end: f64,
    ) -> Result<Trajectory> {
        let steps = self.step_count(t_start, t_end)?;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        times.push(t_start);
        states.push(u0.clone());
        if steps > 0 {
            let h = (t_end - t_start) / steps as f64;
            let mut ws = Workspace::new(self.system.dimension());
            let mut u = u0.clone();
            for j in 0..steps {
                ws.step(&self.system, u.as_mut_slice(), t_start + j as f64 * h, h)?;
                times.push(if j + 1 == steps {
                    t_end
                } else {
                    t_start + (j + 1) as f64 * h
                });
                states.push(u.clone());
            }
        }
        Ok(Trajectory { times, states })
    }
}

/// Serial fine solution over the whole mesh, sub-interval by sub-interval.
/// Boundary values are bit-identical to composing ℱ over each sub-interval.
pub fn serial_fine_solution(
    system: &OdeSystem,
    mesh: &TimeMesh,
) -> Result<(Vec<StateVector>, Trajectory)> {
    let fine = Propagator::fine(system, mesh);
    let n = mesh.n_subintervals();
    let mut boundary = Vec::with_capacity(n + 1);
    boundary.push(system.initial_value().clone());
    let mut traj = Trajectory {
        times: Vec::with_capacity(mesh.total_fine_steps() + 1),
        states: Vec::with_capacity(mesh.total_fine_steps() + 1),
    };
    for i in 0..n {
        let piece =
            fine.propagate_trajectory(&boundary[i], mesh.boundary(i), mesh.boundary(i + 1))?;
        boundary.push(piece.last_state().expect("non-empty").clone());
        traj.extend_joined(piece);
    }
    Ok((boundary, traj))
}
