import hypothesis

hypothesis.settings.register_profile(
    "seedkit", max_examples=60, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("seedkit")
