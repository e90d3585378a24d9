"""Tests for the tiebreak package."""
