//! Exact states of a scenario, one per time point.

use ptmoments::entcond::{werner_state, WernerSpec};
use ptmoments::qstate::{
    build_hamiltonian, depolarize, ground_state, make_ghz, make_neel, reduced_density_matrix,
    DensityMatrix, Propagator, PureState, StateRef,
};

use crate::config::{Config, StateKind};
use crate::error::{CliError, CliResult};

pub enum ExactState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl ExactState {
    pub fn as_ref(&self) -> StateRef<'_> {
        match self {
            ExactState::Pure(p) => StateRef::Pure(p),
            ExactState::Mixed(m) => StateRef::Mixed(m),
        }
    }

    pub fn reduced(&self, sites: &[usize]) -> CliResult<DensityMatrix> {
        Ok(reduced_density_matrix(self.as_ref(), sites)?)
    }
}

pub struct TimePoint {
    pub index: usize,
    pub t_ms: Option<f64>,
    pub state: ExactState,
}

fn finish(cfg: &Config, state: ExactState) -> CliResult<ExactState> {
    if cfg.depolarize_strength == 0.0 {
        return Ok(state);
    }
    let rho = match state {
        ExactState::Pure(p) => p.to_density_matrix(),
        ExactState::Mixed(m) => m,
    };
    Ok(ExactState::Mixed(depolarize(
        &rho,
        cfg.depolarize_strength,
    )?))
}

pub fn time_points(cfg: &Config) -> CliResult<Vec<TimePoint>> {
    let single = |state| -> CliResult<Vec<TimePoint>> {
        Ok(vec![TimePoint {
            index: 0,
            t_ms: None,
            state: finish(cfg, state)?,
        }])
    };
    match cfg.state {
        StateKind::Ghz => single(ExactState::Pure(make_ghz(cfg.n_qubits()?)?)),
        StateKind::TfimGround => {
            let n = cfg.n_qubits()?;
            let h = build_hamiltonian(&cfg.hamiltonian_spec(n)?)?;
            single(ExactState::Pure(ground_state(&h)?.state))
        }
        StateKind::Werner => single(ExactState::Mixed(werner_state(WernerSpec::new(
            2,
            cfg.werner_alpha()?,
        )?)?)),
        StateKind::NeelQuench => {
            let n = cfg.n_qubits()?;
            let h = build_hamiltonian(&cfg.hamiltonian_spec(n)?)?;
            let prop = Propagator::new(&h);
            let neel = make_neel(n)?;
            cfg.times_ms()
                .into_iter()
                .enumerate()
                .map(|(index, t_ms)| {
                    let state = ExactState::Pure(prop.evolve(&neel, t_ms * 1e-3)?);
                    Ok(TimePoint {
                        index,
                        t_ms: Some(t_ms),
                        state: finish(cfg, state)?,
                    })
                })
                .collect()
        }
        StateKind::FromFile => Err(CliError::Config(
            "state: from_file scenarios carry measured data only, no exact state".into(),
        )),
    }
}
