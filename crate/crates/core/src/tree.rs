//! Binary character-level parse trees.
//!
//! A [`ParseNode`] covers the inclusive character range `i..=j` of a word.
//! Leaves cover exactly one character; internal nodes have exactly two
//! children that partition their span.

use crate::error::{Span, TreeViolation};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParseNode {
    pub i: usize,
    pub j: usize,
    pub left: Option<Box<ParseNode>>,
    pub right: Option<Box<ParseNode>>,
    pub token: String,
}

impl ParseNode {
    pub fn leaf(index: usize, ch: char) -> Self {
        ParseNode {
            i: index,
            j: index,
            left: None,
            right: None,
            token: ch.to_string(),
        }
    }

    /// Joins two adjacent subtrees under a new parent.
    ///
    /// The caller is responsible for adjacency (`left.j + 1 == right.i`);
    /// [`validate_tree`] reports violations.
    pub fn join(left: ParseNode, right: ParseNode) -> Self {
        let mut token = String::with_capacity(left.token.len() + right.token.len());
        token.push_str(&left.token);
        token.push_str(&right.token);
        ParseNode {
            i: left.i,
            j: right.j,
            left: Some(Box::new(left)),
            right: Some(Box::new(right)),
            token,
        }
    }

    pub fn span(&self) -> Span {
        (self.i, self.j)
    }

    pub fn is_leaf(&self) -> bool {
        self.left.is_none() && self.right.is_none()
    }

    /// Both children, if this is a well-formed internal node.
    pub fn children(&self) -> Option<(&ParseNode, &ParseNode)> {
        match (&self.left, &self.right) {
            (Some(l), Some(r)) => Some((l, r)),
            _ => None,
        }
    }

    /// Number of characters covered.
    pub fn width(&self) -> usize {
        self.j + 1 - self.i
    }

    /// All node spans in pre-order (root first).
    pub fn spans(&self) -> Vec<Span> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(node) = stack.pop() {
            out.push(node.span());
            if let Some((l, r)) = node.children() {
                stack.push(r);
                stack.push(l);
            }
        }
        out
    }

    pub fn internal_count(&self) -> usize {
        match self.children() {
            Some((l, r)) => 1 + l.internal_count() + r.internal_count(),
            None => 0,
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self.children() {
            Some((l, r)) => l.leaf_count() + r.leaf_count(),
            None => 1,
        }
    }

    /// Finds the node covering exactly `span`, if the tree has one.
    pub fn find(&self, span: Span) -> Option<&ParseNode> {
        if self.span() == span {
            return Some(self);
        }
        let (l, r) = self.children()?;
        if span.1 <= l.j {
            l.find(span)
        } else if span.0 >= r.i {
            r.find(span)
        } else {
            None
        }
    }
}

/// Checks every structural invariant of `node` and that its leaves spell `word`.
pub fn validate_tree(node: &ParseNode, word: &str) -> Result<(), TreeViolation> {
    let chars: Vec<char> = word.chars().collect();
    if node.i != 0 || node.j + 1 != chars.len() {
        return Err(TreeViolation::SpanMismatch {
            span: node.span(),
            detail: format!("root must cover 0..={}", chars.len().saturating_sub(1)),
        });
    }
    validate_node(node, &chars)
}

fn validate_node(node: &ParseNode, chars: &[char]) -> Result<(), TreeViolation> {
    let span = node.span();
    if node.i > node.j || node.j >= chars.len() {
        return Err(TreeViolation::SpanMismatch {
            span,
            detail: format!("outside word of {} characters", chars.len()),
        });
    }
    match (&node.left, &node.right) {
        (None, None) => {
            if node.i != node.j {
                return Err(TreeViolation::SpanMismatch {
                    span,
                    detail: "leaf covers more than one character".into(),
                });
            }
        }
        (Some(l), Some(r)) => {
            if node.i == node.j {
                return Err(TreeViolation::SpanMismatch {
                    span,
                    detail: "internal node covers a single character".into(),
                });
            }
            if l.i != node.i || r.j != node.j || l.j + 1 != r.i {
                return Err(TreeViolation::SpanMismatch {
                    span,
                    detail: format!("children {:?} and {:?} do not partition it", l.span(), r.span()),
                });
            }
            validate_node(l, chars)?;
            validate_node(r, chars)?;
        }
        _ => return Err(TreeViolation::NonBinary { span }),
    }
    let expected: String = chars[node.i..=node.j].iter().collect();
    if node.token != expected {
        return Err(TreeViolation::TokenMismatch {
            span,
            expected,
            found: node.token.clone(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> ParseNode {
        ParseNode::join(ParseNode::leaf(0, 'a'), ParseNode::leaf(1, 'b'))
    }

    #[test]
    fn balanced_pair_is_valid() {
        assert_eq!(validate_tree(&ab(), "ab"), Ok(()));
    }

    #[test]
    fn unary_node_is_rejected() {
        let node = ParseNode {
            i: 0,
            j: 0,
            left: Some(Box::new(ParseNode::leaf(0, 'a'))),
            right: None,
            token: "a".into(),
        };
        assert_eq!(
            validate_tree(&node, "a"),
            Err(TreeViolation::NonBinary { span: (0, 0) })
        );
    }

    #[test]
    fn leaves_spelling_other_word_are_rejected() {
        let node = ParseNode::join(ParseNode::leaf(0, 'b'), ParseNode::leaf(1, 'a'));
        assert!(matches!(
            validate_tree(&node, "ab"),
            Err(TreeViolation::TokenMismatch { .. })
        ));
    }

    #[test]
    fn gap_between_children_is_span_mismatch() {
        let node = ParseNode::join(ParseNode::leaf(0, 'a'), ParseNode::leaf(2, 'c'));
        assert!(matches!(
            validate_tree(&node, "abc"),
            Err(TreeViolation::SpanMismatch { .. })
        ));
    }

    #[test]
    fn stale_parent_token_is_detected() {
        let mut node = ab();
        node.token = "ba".into();
        assert!(matches!(
            validate_tree(&node, "ab"),
            Err(TreeViolation::TokenMismatch { span: (0, 1), .. })
        ));
    }

    #[test]
    fn find_locates_internal_spans() {
        let t = ParseNode::join(ab(), ParseNode::leaf(2, 'c'));
        assert_eq!(t.find((0, 1)).map(|n| n.token.as_str()), Some("ab"));
        assert!(t.find((1, 2)).is_none());
        assert_eq!(t.internal_count(), 2);
        assert_eq!(t.leaf_count(), 3);
    }
}
