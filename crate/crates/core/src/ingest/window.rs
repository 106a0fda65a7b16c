use super::LogRecord;

/// Default window size: 4 KiB of raw log text.
pub const DEFAULT_WINDOW_BYTES: u64 = 4096;

/// A contiguous, record-aligned slice of a log stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LogWindow {
    pub index: usize,
    /// Half-open byte range `[start, end)` in the source.
    pub span: (u64, u64),
    pub records: Vec<LogRecord>,
    pub target_bytes: u64,
}

impl LogWindow {
    pub fn byte_len(&self) -> u64 {
        self.span.1 - self.span.0
    }

    pub fn is_anomalous(&self) -> bool {
        self.records.iter().any(LogRecord::is_anomalous)
    }
}

/// Greedily groups records into windows of at least `target_bytes`.
///
/// A window closes at the first record that brings its byte total to
/// `target_bytes` or more; records are never split. The first window starts
/// at the first record's offset and every later window starts where the
/// previous one ended, so spans tile the input (bytes of skipped lines are
/// attributed to the window that follows them).
///
/// # Panics
///
/// Panics if `target_bytes` is zero.
pub fn window<I>(records: I, target_bytes: u64) -> Windows<I::IntoIter>
where
    I: IntoIterator<Item = LogRecord>,
{
    assert!(target_bytes >= 1, "window size must be at least one byte");
    Windows {
        records: records.into_iter(),
        target_bytes,
        next_index: 0,
        cursor: None,
    }
}

pub struct Windows<I> {
    records: I,
    target_bytes: u64,
    next_index: usize,
    cursor: Option<u64>,
}

impl<I: Iterator<Item = LogRecord>> Iterator for Windows<I> {
    type Item = LogWindow;

    fn next(&mut self) -> Option<LogWindow> {
        let first = self.records.next()?;
        let start = self.cursor.unwrap_or(first.offset);
        let mut end = first.end();
        let mut records = vec![first];
        while end - start < self.target_bytes {
            match self.records.next() {
                Some(r) => {
                    end = r.end();
                    records.push(r);
                }
                None => break,
            }
        }
        self.cursor = Some(end);
        let index = self.next_index;
        self.next_index += 1;
        Some(LogWindow {
            index,
            span: (start, end),
            records,
            target_bytes: self.target_bytes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sized(offset: u64, len: u64) -> LogRecord {
        let mut r = LogRecord::plain(offset, "x".repeat(len as usize - 1));
        r.len = len;
        r
    }

    #[test]
    fn greedy_closes_at_threshold() {
        let recs = vec![sized(0, 3000), sized(3000, 3000), sized(6000, 3000)];
        let ws: Vec<_> = window(recs, 4096).collect();
        assert_eq!(ws.len(), 2);
        assert_eq!(ws[0].records.len(), 2);
        assert_eq!(ws[0].span, (0, 6000));
        assert_eq!(ws[1].records.len(), 1);
        assert_eq!(ws[1].span, (6000, 9000));
        assert_eq!(ws[1].index, 1);
    }

    #[test]
    fn oversized_record_is_not_split() {
        let ws: Vec<_> = window(vec![sized(0, 10_000)], 4096).collect();
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].byte_len(), 10_000);
    }

    #[test]
    fn empty_stream_yields_no_windows() {
        assert_eq!(window(Vec::new(), 4096).count(), 0);
    }

    #[test]
    fn gaps_are_absorbed_into_the_next_window() {
        let recs = vec![sized(0, 10), sized(15, 10)];
        let ws: Vec<_> = window(recs, 10).collect();
        assert_eq!(ws[0].span, (0, 10));
        assert_eq!(ws[1].span, (10, 25));
    }
}
