/// Kind of a recorded simulation event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Particle hop along a bulk edge.
    Hop,
    /// Reservoir injects a particle.
    Create,
    /// Reservoir removes a particle.
    Destroy,
    /// Dual particle absorbed at 0 or N.
    Absorb,
    /// Stirring clock exchanges the contents of an edge.
    Swap,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::Hop => "hop",
            EventKind::Create => "create",
            EventKind::Destroy => "destroy",
            EventKind::Absorb => "absorb",
            EventKind::Swap => "swap",
        }
    }
}

/// Receiver of simulation events; sites 0 and N stand for the boundaries.
pub trait EventSink {
    fn record(&mut self, time: f64, kind: EventKind, from: usize, to: usize);
}

/// Discards every event.
impl EventSink for () {
    fn record(&mut self, _: f64, _: EventKind, _: usize, _: usize) {}
}

/// Safety cap on events per run.
pub const EVENT_CAP: u64 = 1_000_000_000;
