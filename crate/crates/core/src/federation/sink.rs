use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::RoundLog;
use crate::error::{Error, Result};
use crate::model::{serialize_checkpoint, ArchSpec, MlpModel, ParamVector};

/// Persists a federated run: one JSON line per round in `rounds.jsonl` and
/// a checkpoint `global_round_<t>.fedw` every `checkpoint_every` rounds.
pub struct RoundRecorder {
    dir: PathBuf,
    arch: ArchSpec,
    checkpoint_every: Option<usize>,
    log: BufWriter<File>,
}

impl RoundRecorder {
    pub fn create(
        dir: impl AsRef<Path>,
        arch: ArchSpec,
        checkpoint_every: Option<usize>,
    ) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("rounds.jsonl");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(RoundRecorder {
            dir,
            arch,
            checkpoint_every: checkpoint_every.filter(|&n| n > 0),
            log: BufWriter::new(file),
        })
    }

    pub fn record(&mut self, log: &RoundLog, global: &ParamVector) -> Result<()> {
        let path = self.dir.join("rounds.jsonl");
        writeln!(self.log, "{}", log.to_json_line()).map_err(|e| Error::io(&path, e))?;
        self.log.flush().map_err(|e| Error::io(&path, e))?;
        if let Some(every) = self.checkpoint_every {
            if (log.round + 1).is_multiple_of(every) {
                self.checkpoint(global, &format!("global_round_{}.fedw", log.round))?;
            }
        }
        Ok(())
    }

    pub fn checkpoint(&self, params: &ParamVector, name: &str) -> Result<PathBuf> {
        let model = MlpModel::new(self.arch.clone(), params.clone())?;
        let path = self.dir.join(name);
        fs::write(&path, serialize_checkpoint(&model)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::deserialize_checkpoint;

    #[test]
    fn writes_lines_and_periodic_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let arch = ArchSpec::relu(vec![2, 1]).unwrap();
        let mut rec = RoundRecorder::create(dir.path(), arch.clone(), Some(2)).unwrap();
        let params: ParamVector = vec![0.5, -0.5, 0.1].into();
        for round in 0..4 {
            let log = RoundLog {
                round,
                centers: vec![],
                checksum: params.checksum(),
                duration_ms: 0.0,
            };
            rec.record(&log, &params).unwrap();
        }
        let text = fs::read_to_string(dir.path().join("rounds.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(dir.path().join("global_round_1.fedw").exists());
        assert!(!dir.path().join("global_round_2.fedw").exists());
        let back =
            deserialize_checkpoint(&fs::read(dir.path().join("global_round_3.fedw")).unwrap())
                .unwrap();
        assert_eq!(back.params(), &params);
    }
}
