use super::events::EVENT_CAP;
use super::rng::RngStream;
use crate::error::{Error, Result};
use crate::ninja::NinjaState;

/// Runs the Ninja jump chain from `start` until the labels and the Ninja are
/// all absorbed; after the last label is absorbed the Ninja walks alone.
pub fn simulate_ninja(big_n: usize, start: &NinjaState, stream: &RngStream) -> Result<NinjaState> {
    let mut s = NinjaState::new(big_n, start.labels.clone(), start.ninja)?;
    let mut rng = stream.rng();
    let mut events = 0u64;
    while !s.is_terminal(big_n) {
        let mut moves = s.moves(big_n);
        let pick = rng.below(moves.len());
        s = moves.swap_remove(pick);
        events += 1;
        if events >= EVENT_CAP {
            return Err(Error::EventCap { cap: EVENT_CAP, detail: "ninja run".into() });
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn terminates_on_boundary() {
        let start = NinjaState::new(5, vec![1, 2], 4).unwrap();
        for i in 0..200 {
            let end = simulate_ninja(5, &start, &RngStream::new(1, i)).unwrap();
            assert!(end.is_terminal(5));
            assert_eq!(end.labels.len(), 2);
        }
    }

    #[test]
    fn forbidden_start_rejected() {
        let start = NinjaState { labels: vec![4], ninja: 5 };
        assert!(simulate_ninja(5, &start, &RngStream::default()).is_err());
    }
}
