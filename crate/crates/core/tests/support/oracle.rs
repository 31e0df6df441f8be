//! Brute-force reference for topic-group segmentation.
//!
//! Deliberately naive: groups are plain lists of log positions and every
//! property (topic set, shortness, gap) is recomputed from the raw event
//! list on each check. After each merge the scan restarts from the left.

use std::collections::BTreeSet;

/// `events[i] = (topic, timestamp_ms)`; `None` is an unlabeled event.
/// Returns `(topic set, log positions)` per segment.
pub fn reference_segments(
    events: &[(Option<usize>, u64)],
    tau_count: usize,
    tau_gap_ms: u64,
) -> Vec<(BTreeSet<usize>, Vec<usize>)> {
    // Step 1: maximal same-topic runs; unlabeled positions split runs.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, (topic, _)) in events.iter().enumerate() {
        let Some(t) = topic else { continue };
        let extends =
            i > 0 && events[i - 1].0 == Some(*t) && groups.last().is_some_and(|g| *g.last().unwrap() == i - 1);
        if extends {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }

    let topics = |g: &Vec<usize>| -> BTreeSet<usize> { g.iter().map(|&i| events[i].0.unwrap()).collect() };
    let longest_run = |g: &Vec<usize>| -> usize {
        let mut best = 0;
        let mut cur = 0;
        for (j, &i) in g.iter().enumerate() {
            let continues = j > 0 && g[j - 1] + 1 == i && events[g[j - 1]].0 == events[i].0;
            cur = if continues { cur + 1 } else { 1 };
            best = best.max(cur);
        }
        best
    };
    let applies = |a: &Vec<usize>, b: &Vec<usize>| -> bool {
        if topics(a) == topics(b) {
            return true;
        }
        let gap = events[b[0]].1 - events[*a.last().unwrap()].1;
        longest_run(a) < tau_count && longest_run(b) < tau_count && gap < tau_gap_ms
    };

    loop {
        let hit = (0..groups.len().saturating_sub(1)).find(|&i| applies(&groups[i], &groups[i + 1]));
        match hit {
            Some(i) => {
                let b = groups.remove(i + 1);
                groups[i].extend(b);
            }
            None => break,
        }
    }
    groups.into_iter().map(|g| (topics(&g), g)).collect()
}
