"""Test suite for the Flask sports results / GPX viewer application."""
