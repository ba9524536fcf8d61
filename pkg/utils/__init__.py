"""Utility modules: settings, growth loop, schedules, sampling and seeding."""
