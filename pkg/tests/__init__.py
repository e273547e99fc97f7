"""Unit test package for seasonal_lv."""
