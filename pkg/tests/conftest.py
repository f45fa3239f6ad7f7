import hypothesis

# GP fits inside property tests blow the default 200ms deadline
hypothesis.settings.register_profile("ci", max_examples=25, deadline=None)
hypothesis.settings.load_profile("ci")
