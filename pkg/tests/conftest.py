import hypothesis

# jitted first calls can blow the default deadline; examples stay modest
hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile("ci")
