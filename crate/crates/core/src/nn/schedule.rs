use crate::scalar::Scalar;

/// Reduce-on-plateau learning rate: multiply by `decay_factor` after
/// `patience` epochs without improvement of the monitored loss, never going
/// below `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule<T> {
    pub initial: T,
    pub floor: T,
    pub decay_factor: T,
    pub patience: usize,
    current: T,
    best: Option<T>,
    stale: usize,
}

impl<T: Scalar> LrSchedule<T> {
    pub fn new(initial: T, floor: T, decay_factor: T, patience: usize) -> Self {
        Self {
            initial,
            floor,
            decay_factor,
            patience,
            current: initial,
            best: None,
            stale: 0,
        }
    }

    /// Initial rate 1e−3, floor 1e−5, halving after 10 stale epochs.
    pub fn standard() -> Self {
        Self::new(T::lit(1e-3), T::lit(1e-5), T::lit(0.5), 10)
    }

    pub fn current(&self) -> T {
        self.current
    }

    /// Records one epoch's monitored loss and returns the rate for the next.
    pub fn observe(&mut self, loss: T) -> T {
        match self.best {
            Some(b) if !(loss < b) => {
                self.stale += 1;
                if self.stale >= self.patience {
                    self.current = (self.current * self.decay_factor).max(self.floor);
                    self.stale = 0;
                }
            }
            _ => {
                self.best = Some(loss);
                self.stale = 0;
            }
        }
        self.current
    }
}
