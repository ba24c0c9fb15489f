//! `watch`: streaming diagnosis. A reader thread decodes frames into a
//! bounded queue, the calling thread segments them online, and a diagnoser
//! thread processes completed reps from a second bounded queue, so a slow
//! diagnosis never stalls ingestion of the next rep.

use std::io::Read;
use std::sync::mpsc::{self, sync_channel};
use std::thread;
use std::time::{Duration, Instant};

use formsense_core::ingestion::open_stream;
use formsense_core::pipeline::{Pipeline, RepOutcome};
use formsense_core::segment::{population_std, OnlineConfig, OnlineSegmenter, RepEvent};
use formsense_core::{LandmarkFrame, LandmarkSeries};
use serde::{Deserialize, Serialize};

use crate::config::WatchConfig;
use crate::error::{CliError, StageExt};

/// Per-session latency record.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub frames: usize,
    pub rep_count: usize,
    /// Seconds of stream time from each rep's end frame to its recognition.
    pub detection_lags_s: Vec<f64>,
    /// Milliseconds from arrival of the frame completing a rep to its
    /// diagnosis.
    pub compute_latencies_ms: Vec<f64>,
    /// Reps recognized but never diagnosed.
    pub reps_dropped: usize,
    pub outcomes: Vec<RepOutcome>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    (values.iter().sum::<f64>() / values.len() as f64, population_std(values))
}

impl SessionMetrics {
    pub fn lag_stats(&self) -> (f64, f64) {
        mean_std(&self.detection_lags_s)
    }

    pub fn latency_stats(&self) -> (f64, f64) {
        mean_std(&self.compute_latencies_ms)
    }

    pub fn summary(&self) -> String {
        let (lag, lag_sd) = self.lag_stats();
        let (lat, lat_sd) = self.latency_stats();
        format!(
            "frames {}  reps {}  dropped {}  detection lag {lag:.3} ± {lag_sd:.3} s  compute latency {lat:.2} ± {lat_sd:.2} ms",
            self.frames, self.rep_count, self.reps_dropped
        )
    }
}

/// Metrics of a finished or aborted session.
#[derive(Debug)]
pub struct WatchReport {
    pub metrics: SessionMetrics,
    /// First error that ended the session early.
    pub error: Option<CliError>,
}

struct Arrival {
    frame: LandmarkFrame,
    at: Instant,
}

struct Job {
    event: RepEvent,
    series: LandmarkSeries,
    arrived: Instant,
}

struct Done {
    event: RepEvent,
    outcome: formsense_core::Result<RepOutcome>,
    latency_ms: f64,
}

/// Rejections carry stream frame indices rather than slice indices.
fn relocate(outcome: RepOutcome, event: &RepEvent) -> RepOutcome {
    match outcome {
        RepOutcome::Rejected { rep_index, reason, .. } => RepOutcome::Rejected {
            rep_index,
            start_frame: event.start_frame,
            end_frame: event.end_frame,
            reason,
        },
        d => d,
    }
}

/// Runs `pipeline` over the frames of `source`, calling `emit` for every rep
/// in rep order. With `watch.pace`, frames are released at their timestamps.
pub fn watch<R, F>(pipeline: Pipeline, online: OnlineConfig, watch: &WatchConfig, source: R, mut emit: F) -> WatchReport
where
    R: Read + Send + 'static,
    F: FnMut(&RepOutcome),
{
    let cap = watch.queue_capacity.max(1);
    let pace = watch.pace;
    let spec = pipeline.spec.clone();

    let (frame_tx, frame_rx) = sync_channel::<formsense_core::Result<Arrival>>(cap);
    let reader = thread::spawn(move || {
        let clock = Instant::now();
        let mut first = None;
        for item in open_stream(source) {
            let msg = item.map(|frame| {
                if pace {
                    let t0 = *first.get_or_insert(frame.timestamp);
                    let due = clock + Duration::from_secs_f64((frame.timestamp - t0).max(0.0));
                    if let Some(wait) = due.checked_duration_since(Instant::now()) {
                        thread::sleep(wait);
                    }
                }
                Arrival { frame, at: Instant::now() }
            });
            let stop = msg.is_err();
            if frame_tx.send(msg).is_err() || stop {
                break;
            }
        }
    });

    let (job_tx, job_rx) = sync_channel::<Job>(cap);
    let (done_tx, done_rx) = mpsc::channel::<Done>();
    let diagnoser = thread::spawn(move || {
        for job in job_rx {
            let last = job.series.len() - 1;
            let outcome = pipeline
                .diagnose_rep(&job.series, job.event.rep_index, 0, last)
                .map(|o| relocate(o, &job.event));
            let latency_ms = job.arrived.elapsed().as_secs_f64() * 1e3;
            let done = Done {
                event: job.event,
                outcome,
                latency_ms,
            };
            if done_tx.send(done).is_err() {
                break;
            }
        }
    });

    let mut metrics = SessionMetrics::default();
    let mut error: Option<CliError> = None;
    let mut record = |done: Done, metrics: &mut SessionMetrics, error: &mut Option<CliError>| match done.outcome {
        Ok(mut outcome) => {
            if let RepOutcome::Diagnosed(d) = &mut outcome {
                d.latency_ms = done.latency_ms;
            }
            metrics.detection_lags_s.push(done.event.detection_lag);
            metrics.compute_latencies_ms.push(done.latency_ms);
            emit(&outcome);
            metrics.outcomes.push(outcome);
        }
        Err(e) => {
            error.get_or_insert(CliError::Stage {
                stage: "diagnose",
                source: e,
            });
        }
    };

    let mut segmenter = OnlineSegmenter::new(&spec, online);
    let submit = |segmenter: &OnlineSegmenter, event: RepEvent, arrived: Instant| {
        let series = segmenter.frames().slice(event.start_frame, event.end_frame);
        job_tx.send(Job { event, series, arrived }).is_ok()
    };
    let mut submitted = 0usize;
    for msg in &frame_rx {
        let arrival = match msg.stage("stream") {
            Ok(a) => a,
            Err(e) => {
                error = Some(e);
                break;
            }
        };
        metrics.frames += 1;
        match segmenter.push(arrival.frame).stage("segment") {
            Ok(Some(event)) => {
                submitted += 1;
                if !submit(&segmenter, event, arrival.at) {
                    break;
                }
            }
            Ok(None) => {}
            Err(e) => {
                error = Some(e);
                break;
            }
        }
        while let Ok(done) = done_rx.try_recv() {
            record(done, &mut metrics, &mut error);
        }
    }
    drop(frame_rx);
    if error.is_none() {
        if let Some(event) = segmenter.finish() {
            submitted += 1;
            submit(&segmenter, event, Instant::now());
        }
        let _ = reader.join();
    }
    drop(job_tx);
    for done in done_rx {
        record(done, &mut metrics, &mut error);
    }
    let _ = diagnoser.join();
    metrics.rep_count = metrics.outcomes.len();
    metrics.reps_dropped = submitted - metrics.rep_count;
    WatchReport { metrics, error }
}
