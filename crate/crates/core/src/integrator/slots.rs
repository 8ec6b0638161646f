use std::marker::PhantomData;

/// Shared handle to a mutable slice whose elements are written from many
/// workers at once, each at indices no other worker touches. This is the
/// CPU form of a global buffer written at `buffer[thread_index]`.
pub(crate) struct Slots<'a, T> {
    ptr: *mut T,
    len: usize,
    _borrow: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for Slots<'_, T> {}
unsafe impl<T: Send> Sync for Slots<'_, T> {}

impl<'a, T> Slots<'a, T> {
    pub(crate) fn new(slice: &'a mut [T]) -> Self {
        Slots {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _borrow: PhantomData,
        }
    }

    /// # Safety
    /// While the returned reference lives, no other call to `get` may use `i`.
    #[inline]
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn get(&self, i: usize) -> &mut T {
        assert!(i < self.len, "slot {i} out of bounds ({})", self.len);
        &mut *self.ptr.add(i)
    }
}
