use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use futures::Stream;
use tokio::sync::watch;

use crate::store::{Store, StoredEvent};

const WAIT_SLICE: Duration = Duration::from_millis(500);

/// `event:` / `id:` / `data:` lines and a blank line.
pub fn format_event(e: &StoredEvent) -> String {
    format!("event: {}\nid: {}\ndata: {}\n\n", e.event_type, e.id, e.data)
}

struct Cursor {
    store: Arc<Store>,
    job_id: String,
    after: u64,
    rx: Option<watch::Receiver<u64>>,
    finished: bool,
}

/// Replays the persisted log after `after`, then follows live events until
/// the terminal one has been sent.
pub(crate) fn event_stream(
    store: Arc<Store>,
    job_id: String,
    after: u64,
    rx: Option<watch::Receiver<u64>>,
) -> impl Stream<Item = Result<Bytes, Infallible>> {
    let cursor = Cursor {
        store,
        job_id,
        after,
        rx,
        finished: false,
    };
    futures::stream::unfold(cursor, |mut c| async move {
        let mut terminal_status_seen = false;
        loop {
            if c.finished {
                return None;
            }
            if let Some(rx) = c.rx.as_mut() {
                rx.borrow_and_update();
            }
            let events = match c.store.events_after(&c.job_id, c.after) {
                Ok(e) => e,
                Err(e) => {
                    tracing::error!("stream {}: {e}", c.job_id);
                    return None;
                }
            };
            if !events.is_empty() {
                let mut chunk = String::new();
                for e in &events {
                    chunk.push_str(&format_event(e));
                    c.after = e.id;
                    if e.is_terminal() {
                        c.finished = true;
                        break;
                    }
                }
                return Some((Ok(Bytes::from(chunk)), c));
            }
            if terminal_status_seen {
                return None;
            }
            match c.store.job(&c.job_id) {
                Ok(Some(j)) if j.status.is_terminal() => {
                    terminal_status_seen = true;
                    continue;
                }
                Ok(Some(_)) => {}
                _ => return None,
            }
            match c.rx.as_mut() {
                Some(rx) => {
                    if let Ok(Err(_)) = tokio::time::timeout(WAIT_SLICE, rx.changed()).await {
                        c.rx = None;
                    }
                }
                None => tokio::time::sleep(WAIT_SLICE / 5).await,
            }
        }
    })
}
