use super::types::{CascadeRecord, Timestamp, SECONDS_PER_HOUR};

fn within(ts: Timestamp, start: Timestamp, hours: f64) -> bool {
    ts >= start && ((ts - start) as f64) <= hours.max(0.0) * SECONDS_PER_HOUR
}

/// Keeps the tweets published in `[t, t + hours]`, where `t` is the earliest
/// tweet over all given cascades. Cascades left empty are dropped.
/// Negative windows behave like zero.
pub fn truncate_story(cascades: &[&CascadeRecord], hours: f64) -> Vec<CascadeRecord> {
    let Some(start) = cascades.iter().filter_map(|c| c.tweets.iter().map(|t| t.timestamp).min()).min() else {
        return Vec::new();
    };
    cascades
        .iter()
        .filter_map(|c| {
            let tweets: Vec<_> = c.tweets.iter().filter(|t| within(t.timestamp, start, hours)).cloned().collect();
            (!tweets.is_empty()).then(|| CascadeRecord {
                cascade_id: c.cascade_id,
                url_id: c.url_id,
                tweets,
            })
        })
        .collect()
}

/// Truncation relative to the cascade's own source tweet.
pub fn truncate_cascade(cascade: &CascadeRecord, hours: f64) -> CascadeRecord {
    truncate_story(&[cascade], hours).pop().unwrap_or_else(|| CascadeRecord {
        cascade_id: cascade.cascade_id,
        url_id: cascade.url_id,
        tweets: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::propagation::tests::cascade;

    fn with_offsets_hours(offsets: &[f64]) -> CascadeRecord {
        let mut c = cascade(0, 0, 0, &vec![1; offsets.len() + 1]);
        for (t, h) in c.tweets[1..].iter_mut().zip(offsets) {
            t.timestamp = (h * 3600.0) as i64;
        }
        c
    }

    #[test]
    fn zero_window_keeps_only_source() {
        let c = with_offsets_hours(&[0.5, 3.0, 10.0]);
        let t = truncate_cascade(&c, 0.0);
        assert_eq!(t.len(), 1);
        assert!(t.tweets[0].is_source);
    }

    #[test]
    fn full_day_keeps_everything() {
        let c = with_offsets_hours(&[0.5, 3.0, 10.0, 23.9]);
        assert_eq!(truncate_cascade(&c, 24.0), c);
    }

    #[test]
    fn three_hour_window_is_inclusive() {
        let c = with_offsets_hours(&[0.5, 3.0, 10.0]);
        let t = truncate_cascade(&c, 3.0);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn story_window_starts_at_earliest_cascade() {
        let a = with_offsets_hours(&[1.0]);
        let mut b = cascade(1, 0, 100, &[2, 3]);
        for t in &mut b.tweets {
            t.timestamp += 5 * 3600;
        }
        let out = truncate_story(&[&b, &a], 2.0);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].cascade_id, a.cascade_id);
        assert_eq!(truncate_story(&[&b, &a], 5.0).len(), 2);
        assert!(truncate_story(&[], 5.0).is_empty());
    }
}
