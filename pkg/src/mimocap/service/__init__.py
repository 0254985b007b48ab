"""HTTP service layer: pydantic schemas and the FastAPI application.

The application object lives in mimocap.service.app (kept un-reexported
here so the submodule name stays importable).
"""
