use crate::semant::Type;

/// Where a variable lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Home {
    /// A local slot of the declaring function.
    Slot,
    /// A field of the declaring function's frame record.
    Field,
}

/// The resource a variable occupies: a slot index or a frame-record field
/// index, depending on `home`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Access {
    pub offset: u32,
    pub ty: Type,
    pub home: Home,
}

/// Local-slot allocator for one function. Slots are handed out and
/// released in stack order.
#[derive(Clone, Debug)]
pub struct Frame {
    params: u32,
    end: u32,
    high: u32,
}

impl Frame {
    pub fn new(params: u32) -> Frame {
        Frame {
            params,
            end: params,
            high: params,
        }
    }

    pub fn params(&self) -> u32 {
        self.params
    }

    /// Offset of the first available word.
    pub fn frame_end(&self) -> u32 {
        self.end
    }

    /// Number of slots the function needs.
    pub fn high_water(&self) -> u32 {
        self.high
    }

    pub fn alloc_local(&mut self) -> u32 {
        let slot = self.end;
        self.end += 1;
        self.high = self.high.max(self.end);
        slot
    }

    /// Releases the most recently allocated live slot, which must be `slot`.
    pub fn pop_local(&mut self, slot: u32) {
        assert!(
            self.end > self.params && slot + 1 == self.end,
            "pop_local({slot}) out of order; frame end is {}",
            self.end
        );
        self.end -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_are_stack_ordered() {
        let mut f = Frame::new(2);
        assert_eq!(f.frame_end(), 2);
        let a = f.alloc_local();
        let b = f.alloc_local();
        assert_eq!((a, b), (2, 3));
        f.pop_local(b);
        let c = f.alloc_local();
        assert_eq!(c, 3);
        f.pop_local(c);
        f.pop_local(a);
        assert_eq!((f.frame_end(), f.high_water()), (2, 4));
    }

    #[test]
    #[should_panic(expected = "out of order")]
    fn popping_out_of_order_is_a_compiler_bug() {
        let mut f = Frame::new(0);
        let a = f.alloc_local();
        f.alloc_local();
        f.pop_local(a);
    }
}
