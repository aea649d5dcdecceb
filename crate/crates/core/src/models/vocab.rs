use serde::{Deserialize, Serialize};

/// Prompt classes standing in for text embeddings. Class 0 is the null
/// (unconditional) prompt; class `i + 1` is `labels[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVocab {
    labels: Vec<String>,
}

const GROUPS: [(&str, &[&str]); 4] = [
    (
        "walk",
        &["walk", "walks", "walking", "stroll", "approach", "approaches", "run", "runs", "dance", "dances", "dancing", "step", "steps", "move", "moves", "circle"],
    ),
    (
        "reach",
        &[
            "reach", "reaches", "hand", "hands", "shake", "shakes", "handshake", "hug", "hugs", "punch", "punches", "fight",
            "fights", "push", "pushes", "touch", "touches", "wave", "waves", "hit", "hits", "grab", "grabs", "pat", "pats",
            "slap", "slaps", "hold", "holds", "arm", "arms", "wrist", "five",
        ],
    ),
    ("stand", &["stand", "stands", "standing", "still", "wait", "waits", "idle"]),
    ("turn", &["turn", "turns", "turning", "spin", "spins", "rotate", "rotates", "around"]),
];

impl PromptVocab {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        labels.sort();
        labels.dedup();
        Self { labels }
    }

    /// Number of classes including the null class.
    pub fn len(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, class: u32) -> Option<&str> {
        (class as usize).checked_sub(1).and_then(|i| self.labels.get(i)).map(String::as_str)
    }

    /// Class for free text: an exact label match, else the label sharing the
    /// most action keywords with the text, else the null class.
    pub fn class_of(&self, text: &str) -> u32 {
        let text = text.trim().to_lowercase();
        if text.is_empty() {
            return 0;
        }
        if let Some(i) = self.labels.iter().position(|l| l.to_lowercase() == text) {
            return i as u32 + 1;
        }
        let words: Vec<&str> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .collect();
        let mut best = (0usize, 0u32);
        for (i, label) in self.labels.iter().enumerate() {
            let label = label.to_lowercase();
            let Some((_, keys)) = GROUPS.iter().find(|(head, _)| label.contains(head)) else {
                continue;
            };
            let score = words.iter().filter(|w| keys.contains(w)).count();
            if score > best.0 {
                best = (score, i as u32 + 1);
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> PromptVocab {
        PromptVocab::new(["a person walks", "a person reaches out with one hand", "a person stands still", "a person turns around"])
    }

    #[test]
    fn exact_and_keyword_matches() {
        let v = vocab();
        assert_eq!(v.len(), 5);
        let walk = v.class_of("a person walks");
        assert_eq!(v.label(walk), Some("a person walks"));
        assert_eq!(v.label(v.class_of("Two people shake hands")), Some("a person reaches out with one hand"));
        assert_eq!(v.label(v.class_of("he spins around")), Some("a person turns around"));
        assert_eq!(v.class_of("unrelated words"), 0);
        assert_eq!(v.class_of(""), 0);
    }
}
