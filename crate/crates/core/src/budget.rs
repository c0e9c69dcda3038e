//! Execution budget accounting in simulated time.
//!
//! Both the execution-count cap and the time cap are enforced before a
//! charge is applied; a rejected charge leaves the budget untouched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Charge {
    SutExecution,
    /// Non-execution work (training, prediction) in simulated seconds.
    Overhead(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionBudget {
    max_executions: usize,
    max_simulated_time: f64,
    exec_cost: f64,
    consumed_executions: usize,
    consumed_time: f64,
}

// Slack for accumulated floating-point error when many charges sum to exactly the cap.
const TIME_SLACK: f64 = 1e-9;

impl ExecutionBudget {
    pub fn new(max_executions: usize, max_simulated_time: f64, exec_cost: f64) -> Result<Self> {
        if !(exec_cost > 0.0 && exec_cost.is_finite()) {
            return Err(Error::Config(format!("exec_cost must be > 0, got {exec_cost}")));
        }
        if !(max_simulated_time >= 0.0) {
            return Err(Error::Config(format!(
                "max_simulated_time must be >= 0, got {max_simulated_time}"
            )));
        }
        Ok(Self {
            max_executions,
            max_simulated_time,
            exec_cost,
            consumed_executions: 0,
            consumed_time: 0.0,
        })
    }

    /// Budget capped only by execution count; time never binds.
    pub fn executions(max_executions: usize, exec_cost: f64) -> Result<Self> {
        Self::new(max_executions, f64::INFINITY, exec_cost)
    }

    pub fn max_executions(&self) -> usize {
        self.max_executions
    }

    pub fn max_simulated_time(&self) -> f64 {
        self.max_simulated_time
    }

    pub fn exec_cost(&self) -> f64 {
        self.exec_cost
    }

    pub fn consumed_executions(&self) -> usize {
        self.consumed_executions
    }

    pub fn consumed_time(&self) -> f64 {
        self.consumed_time
    }

    pub fn remaining_executions(&self) -> usize {
        self.max_executions - self.consumed_executions
    }

    pub fn can_charge(&self, charge: Charge) -> bool {
        let (execs, secs) = match charge {
            Charge::SutExecution => (1, self.exec_cost),
            Charge::Overhead(s) => (0, s),
        };
        let slack = TIME_SLACK * self.max_simulated_time.max(1.0);
        self.consumed_executions + execs <= self.max_executions
            && self.consumed_time + secs <= self.max_simulated_time + slack
    }

    pub fn charge(&mut self, charge: Charge) -> Result<()> {
        if let Charge::Overhead(s) = charge {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("overhead must be >= 0, got {s}")));
            }
        }
        if !self.can_charge(charge) {
            return Err(Error::BudgetExhausted);
        }
        match charge {
            Charge::SutExecution => {
                self.consumed_executions += 1;
                self.consumed_time += self.exec_cost;
            }
            Charge::Overhead(s) => self.consumed_time += s,
        }
        Ok(())
    }

    /// True when no further system execution fits.
    pub fn is_exhausted(&self) -> bool {
        !self.can_charge(Charge::SutExecution)
    }
}
