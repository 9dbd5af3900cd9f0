//! JSON reading and writing for artifacts with deeply nested witness trees.
//!
//! Composed witnesses nest one level per generator, which exceeds the
//! default parser depth and the default test-thread stack; both helpers run
//! on a dedicated thread with a large stack and no depth limit.

use serde::de::DeserializeOwned;
use serde::Serialize;

const STACK: usize = 512 << 20;

fn on_big_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(STACK)
            .spawn_scoped(s, f)
            .expect("spawn json thread")
            .join()
            .expect("json thread panicked")
    })
}

pub fn from_str<T: DeserializeOwned + Send>(text: &str) -> serde_json::Result<T> {
    on_big_stack(|| {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let value = T::deserialize(&mut de)?;
        de.end()?;
        Ok(value)
    })
}

pub fn to_string_pretty<T: Serialize + Sync>(value: &T) -> serde_json::Result<String> {
    on_big_stack(|| serde_json::to_string_pretty(value))
}

pub fn to_string<T: Serialize + Sync>(value: &T) -> serde_json::Result<String> {
    on_big_stack(|| serde_json::to_string(value))
}

/// Drops `value` on the large stack.
pub fn dispose<T: Send>(value: T) {
    on_big_stack(move || drop(value))
}

#[cfg(test)]
mod tests {
    use crate::witness::Expr;

    #[test]
    fn deep_trees_roundtrip() {
        let mut e = Expr::constant(0.5);
        for _ in 0..5000 {
            e = Expr::clamp(e);
        }
        let s = super::to_string(&e).unwrap();
        let back: Expr = super::from_str(&s).unwrap();
        assert!(back == e);
        super::dispose(back);
        super::dispose(e);
    }
}
