//! Turning a plain point stream into probabilistic nodes.

use probi_core::{Point, ProbabilisticNode};

use crate::error::{HarnessError, Result};

/// Groups consecutive points into nodes of `chunk` equally likely
/// realizations and weight 1. A trailing partial chunk is dropped.
pub struct Chunker<I> {
    points: I,
    chunk: usize,
    emitted: u64,
    dropped: usize,
}

pub fn synth_nodes<I>(points: I, chunk: usize) -> Result<Chunker<I::IntoIter>>
where
    I: IntoIterator<Item = Result<Point>>,
{
    if chunk == 0 {
        return Err(HarnessError::InvalidArgument(
            "chunk must be at least 1".into(),
        ));
    }
    Ok(Chunker {
        points: points.into_iter(),
        chunk,
        emitted: 0,
        dropped: 0,
    })
}

impl<I> Chunker<I> {
    /// Points discarded at the end of the stream; final once exhausted.
    pub fn dropped(&self) -> usize {
        self.dropped
    }
}

impl<I: Iterator<Item = Result<Point>>> Iterator for Chunker<I> {
    type Item = Result<ProbabilisticNode>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = Vec::with_capacity(self.chunk);
        for p in self.points.by_ref() {
            match p {
                Ok(p) => buf.push(p),
                Err(e) => return Some(Err(e)),
            }
            if buf.len() == self.chunk {
                let id = format!("v{}", self.emitted);
                self.emitted += 1;
                return Some(ProbabilisticNode::uniform(id, 1.0, buf).map_err(HarnessError::from));
            }
        }
        self.dropped = buf.len();
        None
    }
}
