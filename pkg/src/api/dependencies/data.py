"""Dependency for uploaded data matrices."""

# Third party imports
from fastapi import File, Form, UploadFile

from src.core.errors import ParseError
from src.models.data import DataMatrix
from src.services.model import standardize as standardize_columns
from src.storage.repositories.matrices import load_csv_text


async def get_data_matrix(
    file: UploadFile = File(...),
    standardize: bool = Form(True),
) -> DataMatrix:
    """Parse the uploaded csv and standardize its columns unless disabled."""
    raw = await file.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError("upload is not utf-8 text", location=e.start)
    x = load_csv_text(text)
    return standardize_columns(x) if standardize else x
