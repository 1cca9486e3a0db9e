use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;
use std::sync::{Arc, Mutex, MutexGuard};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::clock::{Clock, RandomTokens, SystemClock, TokenSource};
use super::log::{open_log, LogEvent, LogWriter};
use super::{
    create_batches, export, round4, Assignment, AssignmentStatus, Batch, Dimension, ExportFormat,
    RatingRecord, ScaleAnchors, ServiceError, StudyConfig,
};
use crate::corpus::{StudyDataset, TargetSpan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    pub rater_id: String,
    pub assignment: Assignment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingItem {
    pub sentence_id: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSentence {
    pub sentence_id: String,
    pub text: String,
    pub target_span: TargetSpan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGroup {
    pub group_id: String,
    pub anchor_left: String,
    pub anchor_right: String,
    pub ticks: Vec<String>,
    pub submitted: bool,
    pub sentences: Vec<TaskSentence>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub submitted_groups: usize,
    pub total_groups: usize,
}

/// What a rater sees. Carries no gold labels and no concreteness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskPayload {
    pub rater_id: String,
    pub batch_id: String,
    pub dimension: Dimension,
    pub groups: Vec<TaskGroup>,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub rater_id: String,
    pub group_id: String,
    pub stored: usize,
    pub assignment_complete: bool,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCompletion {
    pub group_id: String,
    pub inclusiveness: usize,
    pub abstractness: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionStatus {
    pub k: usize,
    pub complete: bool,
    pub groups: Vec<GroupCompletion>,
}

impl CompletionStatus {
    pub fn count(&self, group_id: &str, dimension: Dimension) -> Option<usize> {
        self.groups
            .iter()
            .find(|g| g.group_id == group_id)
            .map(|g| match dimension {
                Dimension::Inclusiveness => g.inclusiveness,
                Dimension::Abstractness => g.abstractness,
            })
    }
}

struct RaterState {
    batch: usize,
    dimension: Dimension,
    status: AssignmentStatus,
    submitted: BTreeSet<String>,
    last_activity: DateTime<Utc>,
}

type RecordKey = (String, Dimension, String);

#[derive(Default)]
struct State {
    raters: HashMap<String, RaterState>,
    /// Active plus complete raters per (batch, dimension).
    slot_fill: HashMap<(usize, Dimension), usize>,
    /// Distinct raters with an accepted submission per (group, dimension).
    group_fill: HashMap<(String, Dimension), usize>,
    /// Keyed by (sentence_id, dimension, rater_id): iteration order is export order.
    records: BTreeMap<RecordKey, (f64, DateTime<Utc>)>,
    log: Option<LogWriter>,
}

/// In-process annotation service. All mutation happens under one lock, so
/// slot allocation and group submission are linearizable.
pub struct StudyService {
    dataset: Arc<StudyDataset>,
    config: StudyConfig,
    batches: Vec<Batch>,
    batch_index: HashMap<String, usize>,
    /// group id → position in `dataset.groups`
    group_index: HashMap<String, usize>,
    sentence_lemma: HashMap<String, String>,
    clock: Arc<dyn Clock>,
    tokens: Arc<dyn TokenSource>,
    state: Mutex<State>,
}

impl StudyService {
    /// In-memory service with the system clock and random tokens.
    pub fn new(dataset: StudyDataset, config: StudyConfig) -> Result<Self, ServiceError> {
        Self::with_sources(
            dataset,
            config,
            Arc::new(SystemClock),
            Arc::new(RandomTokens),
        )
    }

    pub fn with_sources(
        dataset: StudyDataset,
        config: StudyConfig,
        clock: Arc<dyn Clock>,
        tokens: Arc<dyn TokenSource>,
    ) -> Result<Self, ServiceError> {
        config.validate().map_err(ServiceError::Config)?;
        let batches = create_batches(&dataset, &config)?;
        let batch_index = batches
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let group_index = dataset
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.id().to_string(), i))
            .collect();
        let mut sentence_lemma = HashMap::new();
        for s in dataset.sentences() {
            if sentence_lemma
                .insert(s.id.clone(), s.lemma.clone())
                .is_some()
            {
                return Err(ServiceError::InvalidStudy(format!(
                    "sentence id `{}` appears twice",
                    s.id
                )));
            }
        }
        Ok(Self {
            dataset: Arc::new(dataset),
            config,
            batches,
            batch_index,
            group_index,
            sentence_lemma,
            clock,
            tokens,
            state: Mutex::new(State::default()),
        })
    }

    /// Service backed by an append-only log at `path`. An existing log is
    /// replayed first and must belong to the same dataset and `k`.
    pub fn open(
        dataset: StudyDataset,
        config: StudyConfig,
        path: &Path,
        clock: Arc<dyn Clock>,
        tokens: Arc<dyn TokenSource>,
    ) -> Result<Self, ServiceError> {
        let service = Self::with_sources(dataset, config, clock, tokens)?;
        let (events, mut writer) = open_log(path)?;
        let header = LogEvent::Study {
            dataset_hash: service.dataset.content_hash(),
            k: service.config.k,
            batch_ids: service.batches.iter().map(|b| b.id.clone()).collect(),
        };
        let mut events = events.into_iter();
        match events.next() {
            None => writer.append(&header)?,
            Some(first) if first == header => {}
            Some(_) => {
                return Err(ServiceError::LogCorrupt {
                    line: 1,
                    reason: "log belongs to a different study".into(),
                })
            }
        }
        {
            let mut state = service.lock();
            for (i, event) in events.enumerate() {
                service
                    .replay(&mut state, event)
                    .map_err(|e| ServiceError::LogCorrupt {
                        line: i + 2,
                        reason: e.to_string(),
                    })?;
            }
            state.log = Some(writer);
        }
        Ok(service)
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn dataset(&self) -> &StudyDataset {
        &self.dataset
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    fn timeout(&self) -> Duration {
        Duration::minutes(self.config.abandon_timeout_minutes as i64)
    }

    fn write(state: &mut State, event: &LogEvent) -> Result<(), ServiceError> {
        match state.log.as_mut() {
            Some(log) => log.append(event),
            None => Ok(()),
        }
    }

    fn replay(&self, state: &mut State, event: LogEvent) -> Result<(), ServiceError> {
        match event {
            LogEvent::Study { .. } => Err(ServiceError::InvalidStudy("second study header".into())),
            LogEvent::Registered {
                rater_id,
                batch_id,
                dimension,
                at,
            } => {
                let batch = *self.batch_index.get(&batch_id).ok_or_else(|| {
                    ServiceError::InvalidStudy(format!("unknown batch {batch_id}"))
                })?;
                Self::apply_register(state, rater_id, batch, dimension, at);
                Ok(())
            }
            LogEvent::Submitted {
                rater_id,
                group_id,
                items,
                at,
            } => {
                self.check_submission(state, &rater_id, &group_id, &items)?;
                self.apply_submit(state, &rater_id, &group_id, &items, at);
                Ok(())
            }
            LogEvent::Abandoned { rater_id, .. } => {
                if !state.raters.contains_key(&rater_id) {
                    return Err(ServiceError::UnknownRater(rater_id));
                }
                Self::apply_abandon(state, &rater_id);
                Ok(())
            }
        }
    }

    fn apply_register(
        state: &mut State,
        rater_id: String,
        batch: usize,
        dimension: Dimension,
        at: DateTime<Utc>,
    ) {
        *state.slot_fill.entry((batch, dimension)).or_default() += 1;
        state.raters.insert(
            rater_id,
            RaterState {
                batch,
                dimension,
                status: AssignmentStatus::Active,
                submitted: BTreeSet::new(),
                last_activity: at,
            },
        );
    }

    fn apply_submit(
        &self,
        state: &mut State,
        rater_id: &str,
        group_id: &str,
        items: &[RatingItem],
        at: DateTime<Utc>,
    ) {
        let rater = state.raters.get_mut(rater_id).expect("checked");
        let dimension = rater.dimension;
        rater.submitted.insert(group_id.to_string());
        rater.last_activity = at;
        if rater.submitted.len() == self.batches[rater.batch].group_ids.len() {
            rater.status = AssignmentStatus::Complete;
        }
        *state
            .group_fill
            .entry((group_id.to_string(), dimension))
            .or_default() += 1;
        for item in items {
            state.records.insert(
                (item.sentence_id.clone(), dimension, rater_id.to_string()),
                (round4(item.value), at),
            );
        }
    }

    /// Frees the slot and withdraws every rating the rater submitted.
    fn apply_abandon(state: &mut State, rater_id: &str) {
        let rater = state.raters.get_mut(rater_id).expect("checked");
        if rater.status != AssignmentStatus::Active {
            return;
        }
        rater.status = AssignmentStatus::Abandoned;
        let dimension = rater.dimension;
        let submitted: Vec<String> = rater.submitted.iter().cloned().collect();
        if let Some(n) = state.slot_fill.get_mut(&(rater.batch, dimension)) {
            *n -= 1;
        }
        for g in submitted {
            if let Some(n) = state.group_fill.get_mut(&(g, dimension)) {
                *n -= 1;
            }
        }
        state
            .records
            .retain(|(_, d, r), _| !(*d == dimension && r == rater_id));
    }

    /// Marks idle active assignments abandoned.
    fn sweep(&self, state: &mut State, now: DateTime<Utc>) -> Result<(), ServiceError> {
        let timeout = self.timeout();
        let mut idle: Vec<String> = state
            .raters
            .iter()
            .filter(|(_, r)| {
                r.status == AssignmentStatus::Active && now - r.last_activity > timeout
            })
            .map(|(id, _)| id.clone())
            .collect();
        idle.sort();
        for rater_id in idle {
            Self::write(
                state,
                &LogEvent::Abandoned {
                    rater_id: rater_id.clone(),
                    at: now,
                },
            )?;
            Self::apply_abandon(state, &rater_id);
        }
        Ok(())
    }

    /// Binds a fresh rater to the least-filled (batch, dimension) slot; ties
    /// go to the lower batch, then INCLUSIVENESS before ABSTRACTNESS.
    pub fn register_rater(&self) -> Result<Registration, ServiceError> {
        let now = self.clock.now();
        let mut state = self.lock();
        self.sweep(&mut state, now)?;
        let slot = (0..self.batches.len())
            .flat_map(|b| Dimension::ALL.map(|d| (b, d)))
            .map(|slot| (state.slot_fill.get(&slot).copied().unwrap_or(0), slot))
            .filter(|(fill, _)| *fill < self.config.k)
            .min_by_key(|(fill, (b, d))| (*fill, *b, *d))
            .map(|(_, slot)| slot)
            .ok_or(ServiceError::StudyFull)?;
        let (batch, dimension) = slot;
        let mut rater_id = self.tokens.next_token();
        while state.raters.contains_key(&rater_id) {
            rater_id = self.tokens.next_token();
        }
        Self::write(
            &mut state,
            &LogEvent::Registered {
                rater_id: rater_id.clone(),
                batch_id: self.batches[batch].id.clone(),
                dimension,
                at: now,
            },
        )?;
        Self::apply_register(&mut state, rater_id.clone(), batch, dimension, now);
        Ok(Registration {
            assignment: Assignment {
                rater_id: rater_id.clone(),
                batch_id: self.batches[batch].id.clone(),
                dimension,
                status: AssignmentStatus::Active,
            },
            rater_id,
        })
    }

    fn active_rater<'a>(
        &self,
        state: &'a mut State,
        rater_id: &str,
        now: DateTime<Utc>,
    ) -> Result<&'a mut RaterState, ServiceError> {
        let timed_out = match state.raters.get(rater_id) {
            None => return Err(ServiceError::UnknownRater(rater_id.to_string())),
            Some(r) => match r.status {
                AssignmentStatus::Complete => return Err(ServiceError::AlreadySubmitted),
                AssignmentStatus::Abandoned => return Err(ServiceError::Abandoned),
                AssignmentStatus::Active => now - r.last_activity > self.timeout(),
            },
        };
        if timed_out {
            Self::write(
                state,
                &LogEvent::Abandoned {
                    rater_id: rater_id.to_string(),
                    at: now,
                },
            )?;
            Self::apply_abandon(state, rater_id);
            return Err(ServiceError::Abandoned);
        }
        Ok(state.raters.get_mut(rater_id).expect("present"))
    }

    pub fn assignment(&self, rater_id: &str) -> Result<Assignment, ServiceError> {
        let state = self.lock();
        let r = state
            .raters
            .get(rater_id)
            .ok_or_else(|| ServiceError::UnknownRater(rater_id.to_string()))?;
        Ok(Assignment {
            rater_id: rater_id.to_string(),
            batch_id: self.batches[r.batch].id.clone(),
            dimension: r.dimension,
            status: r.status,
        })
    }

    pub fn get_task(&self, rater_id: &str) -> Result<TaskPayload, ServiceError> {
        let now = self.clock.now();
        let mut state = self.lock();
        let rater = self.active_rater(&mut state, rater_id, now)?;
        rater.last_activity = now;
        let batch = &self.batches[rater.batch];
        let anchors: &ScaleAnchors = self.config.anchors.for_dimension(rater.dimension);
        let groups = batch
            .group_ids
            .iter()
            .map(|gid| {
                let group = &self.dataset.groups[self.group_index[gid]];
                TaskGroup {
                    group_id: gid.clone(),
                    anchor_left: ScaleAnchors::render(&anchors.left, &group.lemma),
                    anchor_right: ScaleAnchors::render(&anchors.right, &group.lemma),
                    ticks: anchors
                        .ticks
                        .iter()
                        .map(|t| ScaleAnchors::render(t, &group.lemma))
                        .collect(),
                    submitted: rater.submitted.contains(gid),
                    sentences: group
                        .sentences
                        .iter()
                        .map(|s| TaskSentence {
                            sentence_id: s.id.clone(),
                            text: s.text.clone(),
                            target_span: s.target_span,
                        })
                        .collect(),
                }
            })
            .collect();
        Ok(TaskPayload {
            rater_id: rater_id.to_string(),
            batch_id: batch.id.clone(),
            dimension: rater.dimension,
            groups,
            progress: Progress {
                submitted_groups: rater.submitted.len(),
                total_groups: batch.group_ids.len(),
            },
        })
    }

    fn check_submission(
        &self,
        state: &State,
        rater_id: &str,
        group_id: &str,
        items: &[RatingItem],
    ) -> Result<(), ServiceError> {
        let rater = state
            .raters
            .get(rater_id)
            .ok_or_else(|| ServiceError::UnknownRater(rater_id.to_string()))?;
        match rater.status {
            AssignmentStatus::Active => {}
            AssignmentStatus::Complete => return Err(ServiceError::AlreadySubmitted),
            AssignmentStatus::Abandoned => return Err(ServiceError::Abandoned),
        }
        if !self.batches[rater.batch]
            .group_ids
            .iter()
            .any(|g| g == group_id)
        {
            return Err(ServiceError::GroupNotInBatch(group_id.to_string()));
        }
        if rater.submitted.contains(group_id) {
            return Err(ServiceError::DuplicateGroup(group_id.to_string()));
        }
        let group = &self.dataset.groups[self.group_index[group_id]];
        let expected: HashSet<&str> = group.sentences.iter().map(|s| s.id.as_str()).collect();
        let mut seen = HashSet::new();
        for item in items {
            if !expected.contains(item.sentence_id.as_str()) {
                return Err(ServiceError::ForeignSentence(item.sentence_id.clone()));
            }
            if !seen.insert(item.sentence_id.as_str()) {
                return Err(ServiceError::DuplicateItem(item.sentence_id.clone()));
            }
            if !(item.value.is_finite() && (0.0..=1.0).contains(&item.value)) {
                return Err(ServiceError::ValueOutOfRange {
                    sentence_id: item.sentence_id.clone(),
                    value: item.value,
                });
            }
        }
        let missing: Vec<String> = group
            .sentences
            .iter()
            .filter(|s| !seen.contains(s.id.as_str()))
            .map(|s| s.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(ServiceError::IncompleteGroup { missing });
        }
        Ok(())
    }

    /// Stores one rating per sentence of `group_id`, all or nothing.
    pub fn submit_ratings(
        &self,
        rater_id: &str,
        group_id: &str,
        items: Vec<RatingItem>,
    ) -> Result<Ack, ServiceError> {
        let now = self.clock.now();
        let mut state = self.lock();
        self.active_rater(&mut state, rater_id, now)?;
        self.check_submission(&state, rater_id, group_id, &items)?;
        let items: Vec<RatingItem> = items
            .into_iter()
            .map(|i| RatingItem {
                value: round4(i.value),
                ..i
            })
            .collect();
        Self::write(
            &mut state,
            &LogEvent::Submitted {
                rater_id: rater_id.to_string(),
                group_id: group_id.to_string(),
                items: items.clone(),
                at: now,
            },
        )?;
        self.apply_submit(&mut state, rater_id, group_id, &items, now);
        let rater = &state.raters[rater_id];
        Ok(Ack {
            rater_id: rater_id.to_string(),
            group_id: group_id.to_string(),
            stored: items.len(),
            assignment_complete: rater.status == AssignmentStatus::Complete,
            progress: Progress {
                submitted_groups: rater.submitted.len(),
                total_groups: self.batches[rater.batch].group_ids.len(),
            },
        })
    }

    pub fn completion_status(&self) -> CompletionStatus {
        let state = self.lock();
        let groups: Vec<GroupCompletion> = self
            .dataset
            .groups
            .iter()
            .map(|g| {
                let count = |d| {
                    state
                        .group_fill
                        .get(&(g.id().to_string(), d))
                        .copied()
                        .unwrap_or(0)
                };
                GroupCompletion {
                    group_id: g.id().to_string(),
                    inclusiveness: count(Dimension::Inclusiveness),
                    abstractness: count(Dimension::Abstractness),
                }
            })
            .collect();
        let complete = groups
            .iter()
            .all(|g| g.inclusiveness == self.config.k && g.abstractness == self.config.k);
        CompletionStatus {
            k: self.config.k,
            complete,
            groups,
        }
    }

    /// Snapshot of stored ratings sorted by (sentence_id, dimension, rater_id).
    pub fn records(&self) -> Vec<RatingRecord> {
        let state = self.lock();
        state
            .records
            .iter()
            .map(
                |((sentence_id, dimension, rater_id), (value, at))| RatingRecord {
                    rater_id: rater_id.clone(),
                    sentence_id: sentence_id.clone(),
                    dimension: *dimension,
                    value: *value,
                    submitted_at: *at,
                },
            )
            .collect()
    }

    pub fn lemma_of(&self, sentence_id: &str) -> Option<&str> {
        self.sentence_lemma.get(sentence_id).map(String::as_str)
    }

    pub fn export(&self, format: ExportFormat) -> Result<String, ServiceError> {
        let records = self.records();
        let lemma = |id: &str| self.lemma_of(id).unwrap_or("").to_string();
        match format {
            ExportFormat::Csv => export::export_csv(&records, lemma),
            ExportFormat::Json => export::export_json(&records, lemma),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DatasetConfig, GoldLabel, NounGroup, Sentence};
    use crate::service::{FixedClock, ManualClock, SeededTokens};
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 5, 1, 12, 0, 0).unwrap()
    }

    fn group(lemma: &str, n: usize) -> NounGroup {
        NounGroup {
            lemma: lemma.into(),
            sentences: (0..n)
                .map(|i| {
                    let text = format!("The {lemma} number {i}.");
                    Sentence::new(
                        format!("{lemma}-{i}"),
                        text,
                        lemma,
                        TargetSpan::new(4, 4 + lemma.len()),
                        if i % 2 == 0 {
                            GoldLabel::Generic
                        } else {
                            GoldLabel::NonGeneric
                        },
                    )
                    .unwrap()
                })
                .collect(),
        }
    }

    fn dataset(groups: usize, size: usize) -> StudyDataset {
        StudyDataset {
            groups: (0..groups)
                .map(|i| group(&format!("noun{i}"), size))
                .collect(),
            config: DatasetConfig::default(),
        }
    }

    fn service(groups: usize, size: usize, k: usize) -> StudyService {
        StudyService::with_sources(
            dataset(groups, size),
            StudyConfig {
                k,
                ..Default::default()
            },
            Arc::new(FixedClock(t0())),
            Arc::new(SeededTokens::new(1)),
        )
        .unwrap()
    }

    fn full_items(svc: &StudyService, group_id: &str, value: f64) -> Vec<RatingItem> {
        svc.dataset()
            .group(group_id)
            .unwrap()
            .sentences
            .iter()
            .map(|s| RatingItem {
                sentence_id: s.id.clone(),
                value,
            })
            .collect()
    }

    #[test]
    fn least_covered_slot_order() {
        let svc = service(6, 4, 2);
        let dims: Vec<Dimension> = (0..4)
            .map(|_| svc.register_rater().unwrap().assignment.dimension)
            .collect();
        assert_eq!(
            dims,
            vec![
                Dimension::Inclusiveness,
                Dimension::Abstractness,
                Dimension::Inclusiveness,
                Dimension::Abstractness
            ]
        );
        assert!(matches!(svc.register_rater(), Err(ServiceError::StudyFull)));
    }

    #[test]
    fn k_one_admits_two() {
        let svc = service(6, 4, 1);
        assert!(svc.register_rater().is_ok());
        assert!(svc.register_rater().is_ok());
        assert!(svc.register_rater().is_err());
    }

    #[test]
    fn task_payload_is_blind_and_anchored() {
        let svc = service(6, 5, 2);
        let inc = svc.register_rater().unwrap();
        let abs = svc.register_rater().unwrap();
        let task = svc.get_task(&inc.rater_id).unwrap();
        assert_eq!(task.dimension, Dimension::Inclusiveness);
        assert_eq!(task.groups.len(), 6);
        let g = &task.groups[0];
        assert_eq!(g.anchor_left, format!("one particular {}", g.group_id));
        assert_eq!(g.anchor_right, format!("all {}", g.group_id));
        let json = serde_json::to_string(&task).unwrap();
        assert!(!json.contains("GENERIC"));
        assert!(!json.contains("concreteness"));
        assert!(!json.contains("senses"));

        let task = svc.get_task(&abs.rater_id).unwrap();
        let json = serde_json::to_string(&task).unwrap();
        assert!(json.contains("senses"));
        assert!(!json.contains("one particular"));
        assert!(!json.contains("GENERIC"));

        assert!(matches!(
            svc.get_task("nobody"),
            Err(ServiceError::UnknownRater(_))
        ));
    }

    #[test]
    fn group_submission_rules() {
        let svc = service(6, 5, 2);
        let r = svc.register_rater().unwrap().rater_id;
        let gid = svc.batches()[0].group_ids[0].clone();

        let mut four = full_items(&svc, &gid, 0.5);
        let dropped = four.pop().unwrap();
        match svc.submit_ratings(&r, &gid, four) {
            Err(ServiceError::IncompleteGroup { missing }) => {
                assert_eq!(missing, vec![dropped.sentence_id])
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(svc.records().is_empty());

        let mut bad = full_items(&svc, &gid, 0.5);
        bad[2].value = 1.2;
        let err = svc.submit_ratings(&r, &gid, bad).unwrap_err();
        assert!(err.to_string().starts_with("value out of [0,1]"));
        assert!(svc.records().is_empty());

        let ack = svc
            .submit_ratings(&r, &gid, full_items(&svc, &gid, 0.123_456))
            .unwrap();
        assert_eq!(ack.stored, 5);
        assert_eq!(svc.records().len(), 5);
        assert!(svc.records().iter().all(|x| x.value == 0.1235));

        assert!(matches!(
            svc.submit_ratings(&r, &gid, full_items(&svc, &gid, 0.5)),
            Err(ServiceError::DuplicateGroup(_))
        ));
        assert!(matches!(
            svc.submit_ratings(&r, "elsewhere", Vec::new()),
            Err(ServiceError::GroupNotInBatch(_))
        ));
    }

    #[test]
    fn completion_counts_and_finish() {
        let svc = service(6, 4, 1);
        let status = svc.completion_status();
        assert!(status
            .groups
            .iter()
            .all(|g| g.inclusiveness == 0 && g.abstractness == 0));
        assert!(!status.complete);

        let inc = svc.register_rater().unwrap().rater_id;
        let gids = svc.batches()[0].group_ids.clone();
        for (i, gid) in gids.iter().enumerate() {
            let ack = svc
                .submit_ratings(&inc, gid, full_items(&svc, gid, 0.3))
                .unwrap();
            assert_eq!(ack.assignment_complete, i + 1 == gids.len());
        }
        let status = svc.completion_status();
        assert_eq!(status.count(&gids[0], Dimension::Inclusiveness), Some(1));
        assert_eq!(status.count(&gids[0], Dimension::Abstractness), Some(0));
        assert!(matches!(
            svc.get_task(&inc),
            Err(ServiceError::AlreadySubmitted)
        ));

        let abs = svc.register_rater().unwrap().rater_id;
        for gid in &gids {
            svc.submit_ratings(&abs, gid, full_items(&svc, gid, 0.6))
                .unwrap();
        }
        assert!(svc.completion_status().complete);
        assert_eq!(svc.records().len(), 2 * 6 * 4);
    }

    #[test]
    fn idle_assignment_is_abandoned_and_slot_reopens() {
        let clock = Arc::new(ManualClock::new(t0()));
        let svc = StudyService::with_sources(
            dataset(6, 4),
            StudyConfig {
                k: 1,
                ..Default::default()
            },
            clock.clone(),
            Arc::new(SeededTokens::new(2)),
        )
        .unwrap();
        let slow = svc.register_rater().unwrap().rater_id;
        let gid = svc.batches()[0].group_ids[0].clone();
        svc.submit_ratings(&slow, &gid, full_items(&svc, &gid, 0.4))
            .unwrap();
        svc.register_rater().unwrap();
        assert!(svc.register_rater().is_err());

        clock.advance(Duration::minutes(61));
        let fresh = svc.register_rater().unwrap();
        // Both earlier raters idled out; the first reopened slot is INCLUSIVENESS.
        assert_eq!(fresh.assignment.dimension, Dimension::Inclusiveness);
        assert!(svc.records().is_empty());
        assert_eq!(
            svc.completion_status()
                .count(&gid, Dimension::Inclusiveness),
            Some(0)
        );
        assert!(matches!(svc.get_task(&slow), Err(ServiceError::Abandoned)));
    }

    #[test]
    fn log_replay_restores_state() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.log");
        let make = || {
            StudyService::open(
                dataset(6, 4),
                StudyConfig {
                    k: 2,
                    ..Default::default()
                },
                &path,
                Arc::new(FixedClock(t0())),
                Arc::new(SeededTokens::new(3)),
            )
            .unwrap()
        };
        let (before, rater) = {
            let svc = make();
            let r = svc.register_rater().unwrap().rater_id;
            let gid = svc.batches()[0].group_ids[1].clone();
            svc.submit_ratings(&r, &gid, full_items(&svc, &gid, 0.25))
                .unwrap();
            svc.register_rater().unwrap();
            (svc.export(ExportFormat::Csv).unwrap(), r)
        };
        let svc = make();
        assert_eq!(svc.export(ExportFormat::Csv).unwrap(), before);
        assert_eq!(svc.get_task(&rater).unwrap().progress.submitted_groups, 1);
        // Two raters already hold slots.
        let dims: Vec<Dimension> = (0..2)
            .map(|_| svc.register_rater().unwrap().assignment.dimension)
            .collect();
        assert_eq!(
            dims,
            vec![Dimension::Inclusiveness, Dimension::Abstractness]
        );
        assert!(svc.register_rater().is_err());
    }

    #[test]
    fn log_from_other_study_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.log");
        let open = |groups| {
            StudyService::open(
                dataset(groups, 4),
                StudyConfig::default(),
                &path,
                Arc::new(FixedClock(t0())),
                Arc::new(SeededTokens::new(3)),
            )
        };
        open(6).unwrap();
        assert!(matches!(open(8), Err(ServiceError::LogCorrupt { .. })));
    }
}
