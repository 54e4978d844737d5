//! Per-agent facade over the columnar store.
//!
//! An [`AgentView`] holds no attribute state of its own; every read and
//! write delegates to the backing [`Population`], including batch staging
//! when a batch is open. Writes through a view commit immediately, which is
//! the asynchronous update mode: later agents in a sweep observe earlier
//! agents' writes. Wrapping the sweep in a batch turns the same loop into a
//! synchronous update.

use crate::error::Result;
use crate::population::Population;
use crate::value::{AgentId, Value};

#[derive(Debug)]
pub struct AgentView<'a> {
    population: &'a mut Population,
    id: AgentId,
}

impl Population {
    /// Facade bound to one live agent.
    pub fn view(&mut self, id: AgentId) -> Result<AgentView<'_>> {
        self.row_index(id)?;
        Ok(AgentView {
            population: self,
            id,
        })
    }
}

impl AgentView<'_> {
    pub fn id(&self) -> AgentId {
        self.id
    }

    pub fn get(&self, attr: &str) -> Result<Value> {
        self.population.get_value(self.id, attr)
    }

    pub fn set(&mut self, attr: &str, value: Value) -> Result<()> {
        self.population.set_value(self.id, attr, value)
    }

    pub fn get_label(&self, attr: &str) -> Result<&str> {
        self.population.get_label(self.id, attr)
    }

    pub fn set_label(&mut self, attr: &str, label: &str) -> Result<()> {
        self.population.set_label(self.id, attr, label)
    }
}
