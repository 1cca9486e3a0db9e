use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Dimension, RatingItem, ServiceError};

/// One line of the append-only study log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    /// First line: identifies the study the log belongs to.
    Study {
        dataset_hash: String,
        k: usize,
        batch_ids: Vec<String>,
    },
    Registered {
        rater_id: String,
        batch_id: String,
        dimension: Dimension,
        at: DateTime<Utc>,
    },
    Submitted {
        rater_id: String,
        group_id: String,
        items: Vec<RatingItem>,
        at: DateTime<Utc>,
    },
    Abandoned {
        rater_id: String,
        at: DateTime<Utc>,
    },
}

pub(crate) struct LogWriter {
    file: File,
}

impl LogWriter {
    pub(crate) fn append(&mut self, event: &LogEvent) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(event).expect("log events serialize");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        Ok(())
    }
}

/// Reads every complete event of an existing log and opens it for appending.
/// A final line without its newline is a torn write and is cut off.
pub(crate) fn open_log(path: &Path) -> Result<(Vec<LogEvent>, LogWriter), ServiceError> {
    let mut events = Vec::new();
    let mut good_len: u64 = 0;
    if path.exists() {
        let reader = BufReader::new(File::open(path)?);
        let mut lines = reader.split(b'\n').peekable();
        let mut line_no = 0;
        let total_len = std::fs::metadata(path)?.len();
        while let Some(chunk) = lines.next() {
            let chunk = chunk?;
            line_no += 1;
            let is_last = lines.peek().is_none();
            let terminated = good_len + (chunk.len() as u64) < total_len;
            if chunk.iter().all(u8::is_ascii_whitespace) && terminated {
                good_len += chunk.len() as u64 + 1;
                continue;
            }
            match serde_json::from_slice::<LogEvent>(&chunk) {
                Ok(ev) if terminated => {
                    events.push(ev);
                    good_len += chunk.len() as u64 + 1;
                }
                _ if is_last && !terminated => break,
                Ok(_) => unreachable!("unterminated lines are always last"),
                Err(e) => {
                    return Err(ServiceError::LogCorrupt {
                        line: line_no,
                        reason: e.to_string(),
                    })
                }
            }
        }
    }
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .write(true)
        .truncate(false)
        .open(path)?;
    file.set_len(good_len)?;
    file.seek(SeekFrom::End(0))?;
    Ok((events, LogWriter { file }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn reg(id: &str) -> LogEvent {
        LogEvent::Registered {
            rater_id: id.into(),
            batch_id: "b000".into(),
            dimension: Dimension::Inclusiveness,
            at: Utc.timestamp_opt(1_700_000_000, 0).unwrap(),
        }
    }

    #[test]
    fn round_trip_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.log");
        {
            let (events, mut w) = open_log(&path).unwrap();
            assert!(events.is_empty());
            w.append(&reg("a")).unwrap();
            w.append(&reg("b")).unwrap();
        }
        // Simulate a crash halfway through a write.
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"event\":\"registered\",\"rater").unwrap();
        drop(f);

        let (events, mut w) = open_log(&path).unwrap();
        assert_eq!(events, vec![reg("a"), reg("b")]);
        w.append(&reg("c")).unwrap();
        drop(w);
        let (events, _) = open_log(&path).unwrap();
        assert_eq!(events, vec![reg("a"), reg("b"), reg("c")]);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.log");
        let good = serde_json::to_string(&reg("a")).unwrap();
        std::fs::write(&path, format!("{good}\nnot json\n{good}\n")).unwrap();
        assert!(matches!(
            open_log(&path),
            Err(ServiceError::LogCorrupt { line: 2, .. })
        ));
    }
}
