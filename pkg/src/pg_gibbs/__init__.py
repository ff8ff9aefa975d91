"""Polya-Gamma data-augmentation Gibbs sampling for flat-prior logistic regression."""
