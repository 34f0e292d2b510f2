//! Resolution of transistor model references.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::device::{read_card, ModelCard, TerminalModel};
use crate::grid::{locate_and_weigh, DesignPoint, ModelGrid};

/// Maps the model token of a transistor line to a terminal model.
///
/// Names registered as grids (by default `gcm` for N and `gcmp` for P) need a
/// design point and bind to the lattice ensemble. Names registered as cards
/// bind directly. Anything else is read as a card file path relative to the
/// base directory.
#[derive(Debug, Clone, Default)]
pub struct ModelLibrary {
    grids: BTreeMap<String, Arc<ModelGrid>>,
    cards: BTreeMap<String, Arc<ModelCard>>,
    base_dir: PathBuf,
}

impl ModelLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_base_dir(mut self, dir: impl AsRef<Path>) -> Self {
        self.base_dir = dir.as_ref().to_path_buf();
        self
    }

    pub fn add_grid(&mut self, name: &str, grid: Arc<ModelGrid>) -> &mut Self {
        self.grids.insert(name.to_ascii_lowercase(), grid);
        self
    }

    pub fn add_card(&mut self, name: &str, card: ModelCard) -> &mut Self {
        self.cards.insert(name.to_ascii_lowercase(), Arc::new(card));
        self
    }

    pub fn grid(&self, name: &str) -> Option<&Arc<ModelGrid>> {
        self.grids.get(&name.to_ascii_lowercase())
    }

    pub fn resolve(
        &self,
        model: &str,
        point: Option<DesignPoint>,
    ) -> Result<Arc<dyn TerminalModel>, String> {
        let key = model.to_ascii_lowercase();
        if let Some(grid) = self.grids.get(&key) {
            let p = point.ok_or_else(|| format!("model `{model}` needs lg= and wfin="))?;
            let general = locate_and_weigh(grid, p).map_err(|e| e.to_string())?;
            return Ok(Arc::new(general));
        }
        if point.is_some() {
            return Err(format!(
                "lg= and wfin= apply only to grid models; `{model}` is not one"
            ));
        }
        if let Some(card) = self.cards.get(&key) {
            return Ok(card.clone());
        }
        let path = self.base_dir.join(model);
        let card = read_card(&path).map_err(|e| format!("model `{model}`: {e}"))?;
        Ok(Arc::new(card))
    }
}
